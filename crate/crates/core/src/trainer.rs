//! Training loop and cross-validation orchestration.
//!
//! Training follows a fixed protocol: per iteration one segment is drawn
//! uniformly at random, the cubed-distance loss is evaluated and
//! backpropagated into the gradient accumulators, and every `accum_steps`
//! iterations one Adam update is applied to the summed gradients (an
//! averaging option exists). There is no learning-rate schedule, weight
//! decay, early stopping, or mini-batching.

use std::borrow::Borrow;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::centerline::Centerline;
use crate::metrics::{evaluate_segment, MetricsReport, SegmentRow};
use crate::network::{GcnModel, NetworkError};
use crate::scalar::Real;
use crate::seeds::{derive_seed, salt};
use crate::tubemesh::TubeGraph;

/// Errors from training and cross-validation.
#[derive(Debug)]
pub enum TrainError {
    EmptyDataset,
    /// A dataset segment is unusable; names it and the reason.
    BadSegment { id: String, reason: String },
    /// Loss became NaN/Inf; training aborts with a diagnostic.
    NonFiniteLoss { iteration: u64, segment: String },
    /// Optimizer state does not match the model.
    ShapeMismatch { expected: usize, got: usize },
    /// Cross-validation needs at least two patients, each with segments.
    BadFolds(String),
    Checkpoint(String),
    Network(NetworkError),
    Metrics(crate::metrics::MetricsError),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::EmptyDataset => write!(f, "training dataset is empty"),
            TrainError::BadSegment { id, reason } => write!(f, "segment `{id}`: {reason}"),
            TrainError::NonFiniteLoss { iteration, segment } => write!(
                f,
                "non-finite loss at iteration {iteration} on segment `{segment}`"
            ),
            TrainError::ShapeMismatch { expected, got } => {
                write!(f, "optimizer state holds {got} parameters, model has {expected}")
            }
            TrainError::BadFolds(msg) => write!(f, "cross-validation setup: {msg}"),
            TrainError::Checkpoint(msg) => write!(f, "checkpoint: {msg}"),
            TrainError::Network(e) => write!(f, "{e}"),
            TrainError::Metrics(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for TrainError {}

impl From<NetworkError> for TrainError {
    fn from(e: NetworkError) -> Self {
        TrainError::Network(e)
    }
}

impl From<crate::metrics::MetricsError> for TrainError {
    fn from(e: crate::metrics::MetricsError) -> Self {
        TrainError::Metrics(e)
    }
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Per-parameter first/second moment buffers plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(param_count: usize) -> Self {
        Self {
            m: vec![T::zero(); param_count],
            v: vec![T::zero(); param_count],
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// Bias-corrected Adam update on a flat parameter slice.
///
/// `t` is the 1-based step index (already incremented for this call).
pub fn adam_step_slice<T: Real>(
    params: &mut [T],
    grads: &[T],
    m: &mut [T],
    v: &mut [T],
    t: u64,
    hyper: &AdamParams,
) -> Result<(), TrainError> {
    if grads.len() != params.len() || m.len() != params.len() || v.len() != params.len() {
        return Err(TrainError::ShapeMismatch {
            expected: params.len(),
            got: grads.len().min(m.len()).min(v.len()),
        });
    }
    let lr = T::of(hyper.lr);
    let b1 = T::of(hyper.beta1);
    let b2 = T::of(hyper.beta2);
    let eps = T::of(hyper.eps);
    let one = T::one();
    let bc1 = one - T::of(hyper.beta1.powi(t as i32));
    let bc2 = one - T::of(hyper.beta2.powi(t as i32));
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = b1 * m[i] + (one - b1) * g;
        v[i] = b2 * v[i] + (one - b2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// One Adam update over all model parameters from the accumulated gradients,
/// optionally rescaled (for gradient averaging across accumulation steps).
pub fn adam_step<T: Real>(
    model: &mut GcnModel<T>,
    state: &mut AdamState<T>,
    hyper: &AdamParams,
    grad_scale: T,
) -> Result<(), TrainError> {
    let count = model.param_count();
    if state.m.len() != count {
        return Err(TrainError::ShapeMismatch {
            expected: count,
            got: state.m.len(),
        });
    }
    state.t += 1;
    let t = state.t;
    let mut offset = 0;
    for layer in model.layers_mut() {
        let w_len = layer.weights().len();
        let b_len = layer.biases().len();
        let (w_grads, b_grads): (Vec<T>, Vec<T>) = {
            let gw: Vec<T> = layer.gw.iter().map(|&g| g * grad_scale).collect();
            let gb: Vec<T> = layer.gb.iter().map(|&g| g * grad_scale).collect();
            (gw, gb)
        };
        adam_step_slice(
            &mut layer.w,
            &w_grads,
            &mut state.m[offset..offset + w_len],
            &mut state.v[offset..offset + w_len],
            t,
            hyper,
        )?;
        offset += w_len;
        adam_step_slice(
            &mut layer.b,
            &b_grads,
            &mut state.m[offset..offset + b_len],
            &mut state.v[offset..offset + b_len],
            t,
            hyper,
        )?;
        offset += b_len;
    }
    Ok(())
}

/// Training protocol configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: u64,
    pub accum_steps: u64,
    pub seed: u64,
    /// Checkpoint every this many iterations (0 = only via caller).
    pub checkpoint_every: u64,
    /// Average accumulated gradients instead of summing them.
    pub average_accumulated: bool,
    pub adam: AdamParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 50_000,
            accum_steps: 10,
            seed: 42,
            checkpoint_every: 5_000,
            average_accumulated: false,
            adam: AdamParams::default(),
        }
    }
}

/// One training example: a tube graph with features, its framed centerline,
/// and reference radii for every vertex.
#[derive(Debug, Clone)]
pub struct Segment<T: Real> {
    pub id: String,
    pub centerline: Centerline<T>,
    pub graph: TubeGraph<T>,
    pub reference: Vec<T>,
    pub stratum: Option<String>,
}

/// Per-iteration loss record.
#[derive(Debug, Clone)]
pub struct LossSample {
    pub iteration: u64,
    pub segment_id: String,
    pub loss: f64,
}

fn validate_segment<T: Real>(seg: &Segment<T>, input_width: usize) -> Result<(), TrainError> {
    let features = seg.graph.features().ok_or_else(|| TrainError::BadSegment {
        id: seg.id.clone(),
        reason: "features not extracted".into(),
    })?;
    if features.width() != input_width {
        return Err(TrainError::BadSegment {
            id: seg.id.clone(),
            reason: format!(
                "feature width {} does not match network input {input_width}",
                features.width()
            ),
        });
    }
    if seg.reference.len() != seg.graph.n_vertices() {
        return Err(TrainError::BadSegment {
            id: seg.id.clone(),
            reason: format!(
                "reference radii missing or wrong length: {} for {} vertices",
                seg.reference.len(),
                seg.graph.n_vertices()
            ),
        });
    }
    if seg.reference.iter().any(|r| !r.is_finite()) {
        return Err(TrainError::BadSegment {
            id: seg.id.clone(),
            reason: "reference radii contain non-finite values".into(),
        });
    }
    Ok(())
}

/// Trains a model in place; returns the per-iteration loss history.
pub fn train<T: Real, S: Borrow<Segment<T>>>(
    model: &mut GcnModel<T>,
    dataset: &[S],
    cfg: &TrainConfig,
) -> Result<Vec<LossSample>, TrainError> {
    train_with_checkpoints(model, dataset, cfg, |_, _| Ok(()))
}

/// Trains a model, invoking `on_checkpoint(iteration, model)` every
/// `cfg.checkpoint_every` iterations (if nonzero) and once at the end.
pub fn train_with_checkpoints<T: Real, S: Borrow<Segment<T>>>(
    model: &mut GcnModel<T>,
    dataset: &[S],
    cfg: &TrainConfig,
    mut on_checkpoint: impl FnMut(u64, &GcnModel<T>) -> Result<(), TrainError>,
) -> Result<Vec<LossSample>, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    assert!(cfg.iterations > 0, "iterations must be > 0");
    assert!(cfg.accum_steps >= 1, "accum_steps must be >= 1");
    for seg in dataset {
        validate_segment(seg.borrow(), model.input_width())?;
    }

    let mut sample_rng =
        ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, salt::SEGMENT_SAMPLING));
    model.reseed_dropout(derive_seed(cfg.seed, salt::DROPOUT));
    model.set_training(true);
    model.zero_gradients();

    let mut state = AdamState::new(model.param_count());
    let grad_scale = if cfg.average_accumulated {
        T::one() / T::from_u64(cfg.accum_steps).unwrap()
    } else {
        T::one()
    };

    let mut history = Vec::with_capacity(cfg.iterations as usize);
    for iteration in 1..=cfg.iterations {
        let idx = sample_rng.random_range(0..dataset.len());
        let seg = dataset[idx].borrow();
        let trace = model.forward_train(seg.graph.features().unwrap(), seg.graph.adjacency())?;
        let loss_value = model.backward(&trace, seg.graph.adjacency(), &seg.reference)?;
        if !loss_value.is_finite() {
            model.set_training(false);
            return Err(TrainError::NonFiniteLoss {
                iteration,
                segment: seg.id.clone(),
            });
        }
        history.push(LossSample {
            iteration,
            segment_id: seg.id.clone(),
            loss: loss_value.widen(),
        });

        if iteration % cfg.accum_steps == 0 {
            adam_step(model, &mut state, &cfg.adam, grad_scale)?;
            model.zero_gradients();
        }
        if cfg.checkpoint_every > 0 && iteration % cfg.checkpoint_every == 0 {
            on_checkpoint(iteration, model)?;
        }
    }
    model.set_training(false);
    Ok(history)
}

/// Serializes a loss history as `iteration,segment_id,loss` CSV.
pub fn loss_history_csv(history: &[LossSample]) -> String {
    let mut out = String::from("iteration,segment_id,loss\n");
    for s in history {
        out.push_str(&format!("{},{},{}\n", s.iteration, s.segment_id, s.loss));
    }
    out
}

/// All segments of one patient.
#[derive(Debug, Clone)]
pub struct Patient<T: Real> {
    pub id: String,
    pub segments: Vec<Segment<T>>,
}

/// Outcome of one leave-one-patient-out fold.
pub struct FoldResult<T: Real> {
    pub patient_id: String,
    pub model: GcnModel<T>,
    pub report: MetricsReport,
}

/// Leave-one-patient-out cross-validation.
///
/// For each patient a fresh model (seeded `cfg.seed ^ fold_index`) is trained
/// on every other patient's segments and evaluated on the held-out ones.
pub fn cross_validate<T: Real>(
    patients: &[Patient<T>],
    dims: &[usize],
    mode: crate::network::AggregatorMode,
    cfg: &TrainConfig,
) -> Result<Vec<FoldResult<T>>, TrainError> {
    if patients.len() < 2 {
        return Err(TrainError::BadFolds(format!(
            "need >= 2 patients, got {}",
            patients.len()
        )));
    }
    for p in patients {
        if p.segments.is_empty() {
            return Err(TrainError::BadFolds(format!(
                "patient `{}` has no segments",
                p.id
            )));
        }
    }

    let mut folds = Vec::with_capacity(patients.len());
    for (fold_index, held_out) in patients.iter().enumerate() {
        let fold_seed = cfg.seed ^ fold_index as u64;
        let train_set: Vec<&Segment<T>> = patients
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != fold_index)
            .flat_map(|(_, p)| p.segments.iter())
            .collect();
        let mut model = GcnModel::new(dims, mode, fold_seed)?;
        let mut fold_cfg = cfg.clone();
        fold_cfg.seed = fold_seed;
        train(&mut model, &train_set, &fold_cfg)?;

        let mut rows = Vec::with_capacity(held_out.segments.len());
        for seg in &held_out.segments {
            let pred = model.predict_radii(&seg.graph)?;
            let m = evaluate_segment(&pred, &seg.reference, &seg.graph, &seg.centerline)?;
            rows.push(SegmentRow {
                id: seg.id.clone(),
                stratum: seg.stratum.clone(),
                dsc: m.dsc,
                msd_mm: m.msd_mm,
                hd_mm: m.hd_mm,
                roughness_mm: m.roughness_mm,
            });
        }
        folds.push(FoldResult {
            patient_id: held_out.id.clone(),
            model,
            report: MetricsReport::from_rows(rows),
        });
    }
    Ok(folds)
}
