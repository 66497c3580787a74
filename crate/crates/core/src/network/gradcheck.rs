//! Finite-difference gradient oracles.
//!
//! Both functions differentiate the loss numerically through the forward
//! pass only, never touching the backward path they are used to validate.
//! [`fd_loss_gradient_naive`] re-runs a full forward per evaluation and is
//! the reference; [`fd_loss_gradient`] computes the same central differences
//! but reuses the activations of every layer a perturbation provably cannot
//! reach, which makes whole-network checks tractable.

use crate::scalar::Real;
use crate::tubemesh::Features;

use super::{loss, mean_aggregate, mean_aggregate_into, AggregatorMode, GcnModel, NetworkError};

/// Central-difference gradient of the loss w.r.t. every parameter, by
/// perturbing one parameter at a time and re-running the full forward pass.
///
/// The model must be in evaluation mode (no dropout). Parameters are
/// restored bit-exactly.
pub fn fd_loss_gradient_naive<T: Real>(
    model: &mut GcnModel<T>,
    features: &Features<T>,
    adjacency: &[Vec<usize>],
    reference: &[T],
    step: f64,
) -> Result<Vec<T>, NetworkError> {
    assert!(!model.training(), "finite differences need dropout disabled");
    let h = T::of(step);
    let count = model.param_count();
    let mut grads = Vec::with_capacity(count);
    for i in 0..count {
        let mut eval = |delta: T| -> Result<T, NetworkError> {
            model.perturb_parameter(i, delta);
            let pred = model.predict(features, adjacency);
            model.perturb_parameter(i, -delta);
            loss(&pred?, reference)
        };
        let plus = eval(h)?;
        let minus = eval(-h)?;
        grads.push((plus - minus) / (T::of(2.0) * h));
    }
    Ok(grads)
}

/// A finite-difference gradient plus, per parameter, whether either of the
/// two central evaluations crossed a ReLU or loss-kink boundary (where a
/// central difference stops being a derivative estimator).
pub struct FdGradient<T> {
    pub gradient: Vec<T>,
    pub kink_crossed: Vec<bool>,
}

/// Central-difference gradient of the loss w.r.t. every parameter.
///
/// Matches [`fd_loss_gradient_naive`] up to floating-point noise far below
/// gradient-check tolerances: perturbing a parameter of layer `k` cannot
/// change activations before layer `k`, and within layers `k` and `k+1` it
/// only moves output channel `o`, so those updates are applied as deltas on
/// cached activations instead of full re-evaluations.
pub fn fd_loss_gradient<T: Real>(
    model: &GcnModel<T>,
    features: &Features<T>,
    adjacency: &[Vec<usize>],
    reference: &[T],
    step: f64,
) -> Result<Vec<T>, NetworkError> {
    fd_loss_gradient_flagged(model, features, adjacency, reference, step)
        .map(|fd| fd.gradient)
}

/// [`fd_loss_gradient`] with exact kink-crossing detection.
pub fn fd_loss_gradient_flagged<T: Real>(
    model: &GcnModel<T>,
    features: &Features<T>,
    adjacency: &[Vec<usize>],
    reference: &[T],
    step: f64,
) -> Result<FdGradient<T>, NetworkError> {
    assert!(!model.training(), "finite differences need dropout disabled");
    model.check_features(features)?;
    let h = T::of(step);
    let n = features.n_rows();
    let n_layers = model.layers.len();

    // Base forward pass, keeping every layer's aggregated input and pre-activation.
    let mut aggregated: Vec<Features<T>> = Vec::with_capacity(n_layers);
    let mut pre: Vec<Features<T>> = Vec::with_capacity(n_layers);
    let mut current = features.clone();
    for (k, layer) in model.layers.iter().enumerate() {
        let m = match model.mode {
            AggregatorMode::Gcn => mean_aggregate(&current, adjacency),
            AggregatorMode::Mlp => current.clone(),
        };
        let mut z = Features::zeros(n, layer.out_dim);
        super::linear_forward(layer, &m, &mut z);
        let mut out = z.clone();
        if k + 1 < n_layers {
            super::relu_in_place(&mut out);
        }
        aggregated.push(m);
        pre.push(z);
        current = out;
    }
    let base_pred: Vec<T> = (0..n).map(|v| current.row(v)[0]).collect();

    let inv_deg: Vec<T> = adjacency
        .iter()
        .map(|a| T::one() / T::from_usize(a.len() + 1).unwrap())
        .collect();

    let sign = |x: T| -> i8 {
        if x > T::zero() {
            1
        } else if x < T::zero() {
            -1
        } else {
            0
        }
    };
    let base_loss_sign: Vec<i8> = (0..n)
        .map(|v| {
            let f = base_pred[v];
            let r = reference[v];
            sign(f * f * f - r * r * r)
        })
        .collect();
    let loss_with_kink = |pred: &[T]| -> (T, bool) {
        let mut crossed = false;
        for v in 0..n {
            let f = pred[v];
            let r = reference[v];
            if sign(f * f * f - r * r * r) != base_loss_sign[v] {
                crossed = true;
                break;
            }
        }
        (loss(pred, reference).unwrap(), crossed)
    };

    // Reused evaluation buffers: this routine runs tens of thousands of
    // perturbed forwards, so per-call allocation/zeroing dominates otherwise.
    let mut dz = vec![T::zero(); n];
    let mut dh = vec![T::zero(); n];
    let mut dm = vec![T::zero(); n];
    let mut pred = vec![T::zero(); n];
    let mut scratch_m: Vec<Features<T>> = model
        .layers
        .iter()
        .map(|l| Features::zeros(n, l.in_dim))
        .collect();
    let mut scratch_z: Vec<Features<T>> = model
        .layers
        .iter()
        .map(|l| Features::zeros(n, l.out_dim))
        .collect();

    // Perturbed loss evaluation; the flag records whether any ReLU unit or
    // loss term changed its active side relative to the base point.
    let mut perturbed_loss = |layer_k: usize, row: usize, col: Option<usize>, delta: T| -> (T, bool) {
        let mut crossed = false;
        // Change to this layer's pre-activation, per vertex, at channel `row`.
        let m_k = &aggregated[layer_k];
        match col {
            Some(c) => {
                for (v, slot) in dz.iter_mut().enumerate() {
                    *slot = delta * m_k.row(v)[c];
                }
            }
            None => dz.iter_mut().for_each(|slot| *slot = delta),
        }

        if layer_k + 1 == n_layers {
            for v in 0..n {
                pred[v] = base_pred[v] + dz[v];
            }
            return loss_with_kink(&pred);
        }

        // Through this layer's ReLU: only channel `row` moves.
        let z_k = &pre[layer_k];
        for v in 0..n {
            let z = z_k.row(v)[row];
            if (z > T::zero()) != (z + dz[v] > T::zero()) {
                crossed = true;
            }
            dh[v] = (z + dz[v]).max(T::zero()) - z.max(T::zero());
        }

        // Through the next aggregation: still only channel `row`.
        match model.mode {
            AggregatorMode::Gcn => {
                for v in 0..n {
                    let mut acc = dh[v];
                    for &u in &adjacency[v] {
                        acc += dh[u];
                    }
                    dm[v] = acc * inv_deg[v];
                }
            }
            AggregatorMode::Mlp => dm.copy_from_slice(&dh),
        }

        // Next layer's pre-activation: rank-one update with W's column `row`.
        let next = &model.layers[layer_k + 1];
        scratch_z[layer_k + 1]
            .data_mut()
            .copy_from_slice(pre[layer_k + 1].data());
        for (v, &dm_v) in dm.iter().enumerate() {
            if dm_v == T::zero() {
                continue;
            }
            let base_row = pre[layer_k + 1].row(v);
            let z_row = scratch_z[layer_k + 1].row_mut(v);
            for (r, slot) in z_row.iter_mut().enumerate() {
                *slot += next.w[r * next.in_dim + row] * dm_v;
                if layer_k + 2 < n_layers && (base_row[r] > T::zero()) != (*slot > T::zero()) {
                    crossed = true;
                }
            }
        }

        // From layer k+2 on everything can move: plain recomputation.
        if layer_k + 2 == n_layers {
            let z = &scratch_z[layer_k + 1];
            for (v, slot) in pred.iter_mut().enumerate() {
                *slot = z.row(v)[0];
            }
            let (l, kink) = loss_with_kink(&pred);
            return (l, crossed || kink);
        }
        super::relu_in_place(&mut scratch_z[layer_k + 1]);
        let mut cur = layer_k + 1;
        for j in layer_k + 2..n_layers {
            let layer = &model.layers[j];
            let (left, right) = scratch_z.split_at_mut(j);
            let current = &left[cur];
            match model.mode {
                AggregatorMode::Gcn => {
                    mean_aggregate_into(current, adjacency, &mut scratch_m[j]);
                    super::linear_forward(layer, &scratch_m[j], &mut right[0]);
                }
                AggregatorMode::Mlp => {
                    super::linear_forward(layer, current, &mut right[0]);
                }
            }
            if j + 1 < n_layers {
                for (zv, &bv) in right[0].data().iter().zip(pre[j].data()) {
                    if (*zv > T::zero()) != (bv > T::zero()) {
                        crossed = true;
                        break;
                    }
                }
                super::relu_in_place(&mut right[0]);
            }
            cur = j;
        }
        let z = &scratch_z[n_layers - 1];
        for (v, slot) in pred.iter_mut().enumerate() {
            *slot = z.row(v)[0];
        }
        let (l, kink) = loss_with_kink(&pred);
        (l, crossed || kink)
    };

    let two_h = T::of(2.0) * h;
    let count = model.param_count();
    let mut grads = Vec::with_capacity(count);
    let mut kink_crossed = Vec::with_capacity(count);
    for (k, layer) in model.layers.iter().enumerate() {
        for r in 0..layer.out_dim {
            for c in 0..layer.in_dim {
                let (plus, kp) = perturbed_loss(k, r, Some(c), h);
                let (minus, km) = perturbed_loss(k, r, Some(c), -h);
                grads.push((plus - minus) / two_h);
                kink_crossed.push(kp || km);
            }
        }
        for r in 0..layer.out_dim {
            let (plus, kp) = perturbed_loss(k, r, None, h);
            let (minus, km) = perturbed_loss(k, r, None, -h);
            grads.push((plus - minus) / two_h);
            kink_crossed.push(kp || km);
        }
    }
    Ok(FdGradient {
        gradient: grads,
        kink_crossed,
    })
}
