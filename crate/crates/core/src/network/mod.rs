//! Radius-regression network with exact analytic gradients.
//!
//! Five layers map a 32-sample intensity ray to a scalar radius. In GCN mode
//! each layer first replaces a vertex's vector with the element-wise mean
//! over the vertex and its graph neighbors (full neighborhood, no sampling),
//! then applies a linear map and ReLU; the MLP ablation skips the mean and
//! is otherwise identical, so both share one parameter budget. Hidden layers
//! use inverted dropout in training mode; the output layer is linear. There
//! is no batch normalization: training runs on individual segments, not
//! mini-batches.
//!
//! The training loss is the mean absolute difference of *cubed* radii,
//! `L = (1/|V|) * sum_v |r_v^3 - f(x_v)^3|`, which weights errors by the
//! volume they displace.

pub mod gradcheck;

use std::fmt;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::seeds::{derive_seed, salt};
use crate::tubemesh::{Features, TubeGraph};

/// Layer dimensions of the standard architecture: 32 ray samples in, four
/// 64-wide hidden layers, scalar radius out. 14,657 parameters with biases.
pub const STANDARD_DIMS: [usize; 6] = [32, 64, 64, 64, 64, 1];

/// Default dropout probability on hidden activations.
pub const DEFAULT_DROPOUT_P: f64 = 0.5;

/// Radii below this are clamped at inference time (mm).
pub const MIN_RADIUS_MM: f64 = 0.05;

/// Errors from network construction and evaluation.
#[derive(Debug)]
pub enum NetworkError {
    /// Input feature width does not match the first layer.
    FeatureWidth { expected: usize, got: usize },
    /// Loss over an empty vertex set is undefined.
    EmptyVertexSet,
    /// Prediction/reference length mismatch.
    LengthMismatch { pred: usize, reference: usize },
    /// Invalid architecture description.
    BadDims(String),
    /// Graph is missing extracted features.
    MissingFeatures,
    Io(std::io::Error),
    Format(String),
}

impl fmt::Display for NetworkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkError::FeatureWidth { expected, got } => {
                write!(f, "feature width {got} does not match first layer input {expected}")
            }
            NetworkError::EmptyVertexSet => write!(f, "empty vertex set"),
            NetworkError::LengthMismatch { pred, reference } => {
                write!(f, "prediction length {pred} != reference length {reference}")
            }
            NetworkError::BadDims(msg) => write!(f, "bad layer dims: {msg}"),
            NetworkError::MissingFeatures => write!(f, "graph has no extracted features"),
            NetworkError::Io(e) => write!(f, "model i/o error: {e}"),
            NetworkError::Format(msg) => write!(f, "model format error: {msg}"),
        }
    }
}

impl std::error::Error for NetworkError {}

impl From<std::io::Error> for NetworkError {
    fn from(e: std::io::Error) -> Self {
        NetworkError::Io(e)
    }
}

/// Whether layers aggregate over the mesh neighborhood or act per vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregatorMode {
    /// Element-wise mean over the vertex and its full neighborhood.
    Gcn,
    /// No propagation between vertices: a standard fully-connected layer.
    Mlp,
}

impl fmt::Display for AggregatorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregatorMode::Gcn => write!(f, "gcn"),
            AggregatorMode::Mlp => write!(f, "mlp"),
        }
    }
}

impl std::str::FromStr for AggregatorMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(AggregatorMode::Gcn),
            "mlp" => Ok(AggregatorMode::Mlp),
            other => Err(format!("unknown mode `{other}` (expected gcn or mlp)")),
        }
    }
}

/// One linear layer: weights (out x in, row-major), biases, and matching
/// gradient accumulators.
#[derive(Debug, Clone)]
pub struct LayerParams<T> {
    pub(crate) in_dim: usize,
    pub(crate) out_dim: usize,
    pub(crate) w: Vec<T>,
    pub(crate) b: Vec<T>,
    pub(crate) gw: Vec<T>,
    pub(crate) gb: Vec<T>,
}

impl<T: Real> LayerParams<T> {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            w: vec![T::zero(); in_dim * out_dim],
            b: vec![T::zero(); out_dim],
            gw: vec![T::zero(); in_dim * out_dim],
            gb: vec![T::zero(); out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[T] {
        &self.w
    }

    pub fn biases(&self) -> &[T] {
        &self.b
    }

    fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// Cached activations from a training-mode forward pass, consumed by
/// [`GcnModel::backward`].
pub struct ForwardTrace<T> {
    /// Per layer: aggregated input (m_k).
    aggregated: Vec<Features<T>>,
    /// Per layer: pre-activations (z_k).
    pre_activation: Vec<Features<T>>,
    /// Per hidden layer: dropout multipliers, if drawn.
    masks: Vec<Option<Vec<T>>>,
    /// Final per-vertex prediction.
    pub prediction: Vec<T>,
}

/// The regression network.
#[derive(Debug, Clone)]
pub struct GcnModel<T: Real> {
    layers: Vec<LayerParams<T>>,
    mode: AggregatorMode,
    dropout_p: f64,
    training: bool,
    rng_seed: u64,
    mask_rng: ChaCha8Rng,
}

impl<T: Real> GcnModel<T> {
    /// Builds a model with the given layer dims (at least in -> out) and
    /// Glorot-uniform parameters drawn deterministically from `seed`.
    pub fn new(dims: &[usize], mode: AggregatorMode, seed: u64) -> Result<Self, NetworkError> {
        if dims.len() < 2 {
            return Err(NetworkError::BadDims(format!(
                "need >= 2 dims, got {}",
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(NetworkError::BadDims("zero-width layer".into()));
        }
        if *dims.last().unwrap() != 1 {
            return Err(NetworkError::BadDims(
                "output layer must predict a single radius".into(),
            ));
        }
        let layers = dims
            .windows(2)
            .map(|w| LayerParams::zeros(w[0], w[1]))
            .collect();
        let mut model = Self {
            layers,
            mode,
            dropout_p: DEFAULT_DROPOUT_P,
            training: false,
            rng_seed: seed,
            mask_rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, salt::DROPOUT)),
        };
        model.init_params(seed);
        Ok(model)
    }

    /// The standard 32 -> 64 -> 64 -> 64 -> 64 -> 1 architecture.
    pub fn standard(mode: AggregatorMode, seed: u64) -> Self {
        Self::new(&STANDARD_DIMS, mode, seed).expect("standard dims are valid")
    }

    /// Re-draws all weights Glorot-uniform (`|w| <= sqrt(6/(fan_in+fan_out))`)
    /// and zeroes biases; deterministic per seed.
    pub fn init_params(&mut self, seed: u64) {
        self.rng_seed = seed;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, salt::PARAM_INIT));
        for layer in &mut self.layers {
            let bound = (6.0 / (layer.in_dim + layer.out_dim) as f64).sqrt();
            for w in layer.w.iter_mut() {
                *w = T::of((2.0 * rng.random::<f64>() - 1.0) * bound);
            }
            for b in layer.b.iter_mut() {
                *b = T::zero();
            }
        }
        self.zero_gradients();
        self.mask_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, salt::DROPOUT));
    }

    pub fn mode(&self) -> AggregatorMode {
        self.mode
    }

    /// Reinterprets the same parameters under a different aggregation rule
    /// (the GCN and MLP share one parameter layout).
    pub fn with_mode(mut self, mode: AggregatorMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn dropout_p(&self) -> f64 {
        self.dropout_p
    }

    pub fn set_dropout_p(&mut self, p: f64) {
        assert!((0.0..1.0).contains(&p), "dropout probability must be in [0,1)");
        self.dropout_p = p;
    }

    pub fn seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn training(&self) -> bool {
        self.training
    }

    /// Enables or disables training mode (dropout on/off).
    pub fn set_training(&mut self, training: bool) {
        self.training = training;
    }

    /// Resets the dropout mask stream.
    pub fn reseed_dropout(&mut self, seed: u64) {
        self.mask_rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn layers(&self) -> &[LayerParams<T>] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [LayerParams<T>] {
        &mut self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].in_dim];
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        dims
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].in_dim
    }

    /// Total number of trainable parameters (weights + biases).
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    /// All parameters, flat: per layer, weights row-major then biases.
    pub fn parameters_flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    /// Gradient accumulators in the same flat layout.
    pub fn gradients_flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.gw);
            out.extend_from_slice(&l.gb);
        }
        out
    }

    /// Adds `delta` to one parameter addressed by its flat index.
    pub fn perturb_parameter(&mut self, flat_index: usize, delta: T) {
        let mut idx = flat_index;
        for l in &mut self.layers {
            if idx < l.w.len() {
                l.w[idx] += delta;
                return;
            }
            idx -= l.w.len();
            if idx < l.b.len() {
                l.b[idx] += delta;
                return;
            }
            idx -= l.b.len();
        }
        panic!("flat index {flat_index} out of range");
    }

    pub fn zero_gradients(&mut self) {
        for l in &mut self.layers {
            l.gw.iter_mut().for_each(|g| *g = T::zero());
            l.gb.iter_mut().for_each(|g| *g = T::zero());
        }
    }

    fn check_features(&self, features: &Features<T>) -> Result<(), NetworkError> {
        if features.width() != self.input_width() {
            return Err(NetworkError::FeatureWidth {
                expected: self.input_width(),
                got: features.width(),
            });
        }
        Ok(())
    }

    /// Evaluation-mode forward pass: pure, deterministic, no dropout.
    pub fn predict(
        &self,
        features: &Features<T>,
        adjacency: &[Vec<usize>],
    ) -> Result<Vec<T>, NetworkError> {
        self.check_features(features)?;
        let n = features.n_rows();
        let n_layers = self.layers.len();
        let mut current = features.clone();
        for (k, layer) in self.layers.iter().enumerate() {
            let aggregated = match self.mode {
                AggregatorMode::Gcn => mean_aggregate(&current, adjacency),
                AggregatorMode::Mlp => current,
            };
            let mut z = Features::zeros(n, layer.out_dim);
            linear_forward(layer, &aggregated, &mut z);
            if k + 1 < n_layers {
                relu_in_place(&mut z);
            }
            current = z;
        }
        Ok((0..n).map(|v| current.row(v)[0]).collect())
    }

    /// Training-mode forward pass; caches activations and dropout masks.
    pub fn forward_train(
        &mut self,
        features: &Features<T>,
        adjacency: &[Vec<usize>],
    ) -> Result<ForwardTrace<T>, NetworkError> {
        self.check_features(features)?;
        let n = features.n_rows();
        let n_layers = self.layers.len();
        let draw_masks = self.training && self.dropout_p > 0.0;

        let mut aggregated_all = Vec::with_capacity(n_layers);
        let mut pre_all = Vec::with_capacity(n_layers);
        let mut masks_all = Vec::with_capacity(n_layers);
        let mut current = features.clone();
        for k in 0..n_layers {
            let layer = &self.layers[k];
            let aggregated = match self.mode {
                AggregatorMode::Gcn => mean_aggregate(&current, adjacency),
                AggregatorMode::Mlp => current.clone(),
            };
            let mut z = Features::zeros(n, layer.out_dim);
            linear_forward(layer, &aggregated, &mut z);
            let mut h = z.clone();
            let mask = if k + 1 < n_layers {
                relu_in_place(&mut h);
                if draw_masks {
                    let mask = dropout_mask::<T>(
                        &mut self.mask_rng,
                        n * layer.out_dim,
                        self.dropout_p,
                    );
                    for (v, m) in h.data_mut().iter_mut().zip(&mask) {
                        *v *= *m;
                    }
                    Some(mask)
                } else {
                    None
                }
            } else {
                None
            };
            aggregated_all.push(aggregated);
            pre_all.push(z);
            masks_all.push(mask);
            current = h;
        }
        let prediction = (0..n).map(|v| current.row(v)[0]).collect();
        Ok(ForwardTrace {
            aggregated: aggregated_all,
            pre_activation: pre_all,
            masks: masks_all,
            prediction,
        })
    }

    /// Backpropagates the cubed-distance loss through a cached forward pass,
    /// accumulating parameter gradients. Returns the loss value.
    pub fn backward(
        &mut self,
        trace: &ForwardTrace<T>,
        adjacency: &[Vec<usize>],
        reference: &[T],
    ) -> Result<T, NetworkError> {
        let n = trace.prediction.len();
        if n == 0 {
            return Err(NetworkError::EmptyVertexSet);
        }
        if reference.len() != n {
            return Err(NetworkError::LengthMismatch {
                pred: n,
                reference: reference.len(),
            });
        }
        let loss_value = loss(&trace.prediction, reference)?;

        let inv_n = T::one() / T::from_usize(n).unwrap();
        let three = T::of(3.0);
        // dL/df_v = (1/|V|) * 3 f_v^2 * sign(f_v^3 - r_v^3); sign(0) = 0.
        let mut grad = Features::zeros(n, 1);
        for (v, (&f, &r)) in trace.prediction.iter().zip(reference).enumerate() {
            let diff = f * f * f - r * r * r;
            let sign = if diff > T::zero() {
                T::one()
            } else if diff < T::zero() {
                -T::one()
            } else {
                T::zero()
            };
            grad.row_mut(v)[0] = inv_n * three * f * f * sign;
        }

        for k in (0..self.layers.len()).rev() {
            let is_output = k + 1 == self.layers.len();
            let z = &trace.pre_activation[k];
            let m = &trace.aggregated[k];
            let in_dim = self.layers[k].in_dim;

            // Gradient through dropout and ReLU into the pre-activation.
            let mut gz = grad;
            if !is_output {
                if let Some(mask) = &trace.masks[k] {
                    for (g, mval) in gz.data_mut().iter_mut().zip(mask) {
                        *g *= *mval;
                    }
                }
                for (g, &zv) in gz.data_mut().iter_mut().zip(z.data()) {
                    if zv <= T::zero() {
                        *g = T::zero();
                    }
                }
            }

            // Parameter gradients.
            {
                let layer = &mut self.layers[k];
                for v in 0..n {
                    let gz_row = gz.row(v);
                    let m_row = m.row(v);
                    for (r, &g) in gz_row.iter().enumerate() {
                        if g == T::zero() {
                            continue;
                        }
                        let w_row = &mut layer.gw[r * in_dim..(r + 1) * in_dim];
                        for (slot, &mi) in w_row.iter_mut().zip(m_row) {
                            *slot += g * mi;
                        }
                        layer.gb[r] += g;
                    }
                }
            }

            if k == 0 {
                break;
            }

            // Gradient w.r.t. the aggregated input, then through the mean.
            let mut gm = Features::zeros(n, in_dim);
            let w = &self.layers[k].w;
            for v in 0..n {
                let gz_row = gz.row(v);
                let gm_row = gm.row_mut(v);
                for (r, &g) in gz_row.iter().enumerate() {
                    if g == T::zero() {
                        continue;
                    }
                    let w_row = &w[r * in_dim..(r + 1) * in_dim];
                    for (slot, &wv) in gm_row.iter_mut().zip(w_row) {
                        *slot += g * wv;
                    }
                }
            }
            grad = match self.mode {
                AggregatorMode::Gcn => mean_aggregate_backward(&gm, adjacency),
                AggregatorMode::Mlp => gm,
            };
        }

        Ok(loss_value)
    }

    /// Predicts per-vertex radii for a graph with extracted features,
    /// clamped to at least [`MIN_RADIUS_MM`].
    pub fn predict_radii(&self, graph: &TubeGraph<T>) -> Result<Vec<T>, NetworkError> {
        let features = graph.features().ok_or(NetworkError::MissingFeatures)?;
        let raw = self.predict(features, graph.adjacency())?;
        let floor = T::of(MIN_RADIUS_MM);
        Ok(raw.into_iter().map(|r| r.max(floor)).collect())
    }
}

/// Mean aggregation over closed neighborhoods: for each vertex, the
/// element-wise mean of its own row and its neighbors' rows.
pub fn mean_aggregate<T: Real>(features: &Features<T>, adjacency: &[Vec<usize>]) -> Features<T> {
    let mut out = Features::zeros(features.n_rows(), features.width());
    mean_aggregate_into(features, adjacency, &mut out);
    out
}

/// [`mean_aggregate`] writing into an existing buffer of matching shape.
pub fn mean_aggregate_into<T: Real>(
    features: &Features<T>,
    adjacency: &[Vec<usize>],
    out: &mut Features<T>,
) {
    let n = features.n_rows();
    assert_eq!(n, adjacency.len(), "adjacency size mismatch");
    assert_eq!(out.n_rows(), n);
    assert_eq!(out.width(), features.width());
    for (v, neighbors) in adjacency.iter().enumerate() {
        let scale = T::one() / T::from_usize(neighbors.len() + 1).unwrap();
        let row = features.row(v);
        let out_row = out.row_mut(v);
        out_row.copy_from_slice(row);
        for &u in neighbors {
            let u_row = features.row(u);
            for (slot, &x) in out_row.iter_mut().zip(u_row) {
                *slot += x;
            }
        }
        for slot in out_row.iter_mut() {
            *slot *= scale;
        }
    }
}

/// Adjoint of [`mean_aggregate`]: routes each vertex's incoming gradient,
/// scaled by `1/(deg(v)+1)`, to itself and each neighbor.
pub fn mean_aggregate_backward<T: Real>(
    grad: &Features<T>,
    adjacency: &[Vec<usize>],
) -> Features<T> {
    let n = grad.n_rows();
    let width = grad.width();
    let mut out = Features::zeros(n, width);
    for (v, neighbors) in adjacency.iter().enumerate() {
        let scale = T::one() / T::from_usize(neighbors.len() + 1).unwrap();
        let g_row = grad.row(v);
        // self
        {
            let out_row = out.row_mut(v);
            for (slot, &g) in out_row.iter_mut().zip(g_row) {
                *slot += g * scale;
            }
        }
        for &u in neighbors {
            let g_row = grad.row(v);
            let start = u * width;
            let out_slice = &mut out.data_mut()[start..start + width];
            for (slot, &g) in out_slice.iter_mut().zip(g_row) {
                *slot += g * scale;
            }
        }
    }
    out
}

/// Inverted-dropout multipliers: `0` with probability `p`, else `1/(1-p)`.
pub fn dropout_mask<T: Real>(rng: &mut ChaCha8Rng, len: usize, p: f64) -> Vec<T> {
    let keep_scale = T::of(1.0 / (1.0 - p));
    (0..len)
        .map(|_| {
            if rng.random::<f64>() < p {
                T::zero()
            } else {
                keep_scale
            }
        })
        .collect()
}

/// Mean absolute cubed-radius difference: `(1/|V|) sum |r^3 - f^3|`.
pub fn loss<T: Real>(pred: &[T], reference: &[T]) -> Result<T, NetworkError> {
    if pred.is_empty() {
        return Err(NetworkError::EmptyVertexSet);
    }
    if pred.len() != reference.len() {
        return Err(NetworkError::LengthMismatch {
            pred: pred.len(),
            reference: reference.len(),
        });
    }
    let sum: T = pred
        .iter()
        .zip(reference)
        .map(|(&f, &r)| (r * r * r - f * f * f).abs())
        .fold(T::zero(), |a, b| a + b);
    Ok(sum / T::from_usize(pred.len()).unwrap())
}

/// `z = W m + b` for every vertex row.
fn linear_forward<T: Real>(layer: &LayerParams<T>, input: &Features<T>, out: &mut Features<T>) {
    let in_dim = layer.in_dim;
    debug_assert_eq!(input.width(), in_dim);
    for v in 0..input.n_rows() {
        let x = input.row(v);
        let out_row = out.row_mut(v);
        for (r, slot) in out_row.iter_mut().enumerate() {
            let w_row = &layer.w[r * in_dim..(r + 1) * in_dim];
            *slot = layer.b[r] + dot(w_row, x);
        }
    }
}

fn relu_in_place<T: Real>(f: &mut Features<T>) {
    for v in f.data_mut().iter_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Fixed-order eight-lane dot product (deterministic, instruction-parallel).
#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let mut chunks_a = a.chunks_exact(8);
    let mut chunks_b = b.chunks_exact(8);
    for (ca, cb) in (&mut chunks_a).zip(&mut chunks_b) {
        for lane in 0..8 {
            acc[lane] += ca[lane] * cb[lane];
        }
    }
    let mut total = ((acc[0] + acc[1]) + (acc[2] + acc[3]))
        + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (x, y) in chunks_a.remainder().iter().zip(chunks_b.remainder()) {
        total += *x * *y;
    }
    total
}

/// Checkpoint file header; the parameter blob (little-endian f64, layers in
/// order, weights row-major then biases) follows the header line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub layer_dims: Vec<usize>,
    pub mode: AggregatorMode,
    pub dropout_p: f64,
    pub seed: u64,
    pub iteration: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<serde_json::Value>,
}

const CHECKPOINT_FORMAT: &str = "tubegcn-checkpoint";

/// Writes a model checkpoint: one JSON header line, then the parameter blob.
pub fn save_checkpoint<T: Real>(
    model: &GcnModel<T>,
    path: &Path,
    iteration: u64,
    train: Option<serde_json::Value>,
) -> Result<(), NetworkError> {
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.to_string(),
        version: 1,
        layer_dims: model.layer_dims(),
        mode: model.mode,
        dropout_p: model.dropout_p,
        seed: model.rng_seed,
        iteration,
        train,
    };
    let mut bytes = serde_json::to_string(&header)
        .map_err(|e| NetworkError::Format(format!("{e}")))?
        .into_bytes();
    bytes.push(b'\n');
    for p in model.parameters_flat() {
        bytes.extend_from_slice(&p.widen().to_le_bytes());
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Reads a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint<T: Real>(path: &Path) -> Result<(GcnModel<T>, CheckpointHeader), NetworkError> {
    let bytes = std::fs::read(path)?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| NetworkError::Format("missing header line".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..newline])
        .map_err(|e| NetworkError::Format(format!("header: {e}")))?;
    if header.format != CHECKPOINT_FORMAT {
        return Err(NetworkError::Format(format!(
            "unexpected format tag `{}`",
            header.format
        )));
    }
    let mut model = GcnModel::new(&header.layer_dims, header.mode, header.seed)?;
    model.dropout_p = header.dropout_p;
    let blob = &bytes[newline + 1..];
    let expected = model.param_count() * 8;
    if blob.len() != expected {
        return Err(NetworkError::Format(format!(
            "parameter blob holds {} bytes, expected {expected}",
            blob.len()
        )));
    }
    let mut values = blob.chunks_exact(8).map(|c| {
        T::of(f64::from_le_bytes([
            c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7],
        ]))
    });
    for layer in &mut model.layers {
        for w in layer.w.iter_mut() {
            *w = values.next().unwrap();
        }
        for b in layer.b.iter_mut() {
            *b = values.next().unwrap();
        }
    }
    Ok((model, header))
}
