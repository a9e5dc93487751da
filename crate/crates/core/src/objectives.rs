//! Training losses. Each returns the loss value and its gradient with
//! respect to the logits (or head logits).
//!
//! OOD-score orientation throughout the crate: `energy(z) = -logsumexp(z)`,
//! larger means more OOD.

use std::collections::HashSet;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default exposure margins on the energy scale.
pub const DEFAULT_S_ID: f64 = -5.0;
pub const DEFAULT_S_OOD: f64 = -1.0;

pub fn logsumexp(z: ArrayView1<'_, f64>) -> f64 {
    let max = z.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

pub fn softmax(z: ArrayView1<'_, f64>) -> Vec<f64> {
    let lse = logsumexp(z);
    z.iter().map(|&v| (v - lse).exp()).collect()
}

/// `E(z) = -log Σ_k exp(z_k)`, max-shifted.
pub fn energy(z: ArrayView1<'_, f64>) -> f64 {
    -logsumexp(z)
}

/// Mean cross-entropy over `train_ids`.
pub fn supervised_loss(
    logits: &Array2<f64>,
    targets: &[Option<usize>],
    train_ids: &[usize],
) -> Result<(f64, Array2<f64>)> {
    if train_ids.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let items = train_ids
        .iter()
        .map(|&v| match targets.get(v).copied().flatten() {
            Some(class) => Ok((v, class)),
            None => Err(Error::InvalidArgument(format!("training node {v} has no ID label"))),
        })
        .collect::<Result<Vec<_>>>()?;
    cross_entropy(logits, &items)
}

fn cross_entropy(logits: &Array2<f64>, items: &[(usize, usize)]) -> Result<(f64, Array2<f64>)> {
    let scale = 1.0 / items.len() as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros(logits.dim());
    for &(v, class) in items {
        if class >= logits.ncols() {
            return Err(Error::Shape(format!("target {class} but {} logit columns", logits.ncols())));
        }
        let row = logits.row(v);
        loss -= row[class] - logsumexp(row);
        for (k, p) in softmax(row).into_iter().enumerate() {
            grad[[v, k]] += scale * (p - if k == class { 1.0 } else { 0.0 });
        }
    }
    Ok((loss * scale, grad))
}

/// Squared-hinge margin regularizer on energy scores:
/// ID nodes are penalized above `s_id`, pseudo-OOD nodes below `s_ood`.
pub fn exposure_loss(
    logits: &Array2<f64>,
    id_ids: &[usize],
    ood_ids: &[usize],
    s_id: f64,
    s_ood: f64,
) -> Result<(f64, Array2<f64>)> {
    if ood_ids.is_empty() {
        return Err(Error::NoPseudoOod);
    }
    if id_ids.is_empty() {
        return Err(Error::Empty("ID set for exposure"));
    }
    if s_ood <= s_id {
        return Err(Error::InvalidArgument(format!("s_ood ({s_ood}) must exceed s_id ({s_id})")));
    }
    let id_set: HashSet<usize> = id_ids.iter().copied().collect();
    if let Some(v) = ood_ids.iter().find(|v| id_set.contains(v)) {
        return Err(Error::InvalidArgument(format!("node {v} is in both the ID and pseudo-OOD sets")));
    }

    let mut loss = 0.0;
    let mut grad = Array2::zeros(logits.dim());
    // d/dz ReLU(±(E - s))² = ±2·ReLU(·)·∂E/∂z with ∂E/∂z = -softmax(z)
    let mut hinge = |ids: &[usize], sign: f64, margin: f64| {
        let scale = 1.0 / ids.len() as f64;
        let mut term = 0.0;
        for &v in ids {
            let row = logits.row(v);
            let gap = (sign * (energy(row) - margin)).max(0.0);
            if gap > 0.0 {
                term += gap * gap;
                for (k, p) in softmax(row).into_iter().enumerate() {
                    grad[[v, k]] += scale * 2.0 * gap * sign * -p;
                }
            }
        }
        term * scale
    };
    loss += hinge(id_ids, 1.0, s_id);
    loss += hinge(ood_ids, -1.0, s_ood);
    Ok((loss, grad))
}

/// `L_sup + λ · L_expo`, with the exposure ID set equal to `train_ids`.
pub fn combined_loss(
    logits: &Array2<f64>,
    targets: &[Option<usize>],
    train_ids: &[usize],
    ood_ids: &[usize],
    lambda: f64,
    s_id: f64,
    s_ood: f64,
) -> Result<(f64, Array2<f64>)> {
    let (sup, mut grad) = supervised_loss(logits, targets, train_ids)?;
    let (expo, expo_grad) = exposure_loss(logits, train_ids, ood_ids, s_id, s_ood)?;
    grad.scaled_add(lambda, &expo_grad);
    Ok((sup + lambda * expo, grad))
}

/// Cross-entropy over labeled ID nodes and pseudo-OOD nodes, the latter
/// targeting the extra class index `K`.
pub fn kplus1_loss(
    logits: &Array2<f64>,
    targets: &[Option<usize>],
    train_ids: &[usize],
    pseudo_ood_ids: &[usize],
) -> Result<(f64, Array2<f64>)> {
    if pseudo_ood_ids.is_empty() {
        return Err(Error::NoPseudoOod);
    }
    let ood_class = logits
        .ncols()
        .checked_sub(1)
        .ok_or_else(|| Error::Shape("kplus1 needs at least one logit column".into()))?;
    let mut items = Vec::with_capacity(train_ids.len() + pseudo_ood_ids.len());
    for &v in train_ids {
        match targets.get(v).copied().flatten() {
            Some(c) if c < ood_class => items.push((v, c)),
            _ => return Err(Error::InvalidArgument(format!("training node {v} has no ID label"))),
        }
    }
    items.extend(pseudo_ood_ids.iter().map(|&v| (v, ood_class)));
    cross_entropy(logits, &items)
}

/// Mean binary cross-entropy of `sigmoid(head_logits)` with target 1 for
/// pseudo-OOD nodes and 0 for ID nodes. The gradient has one entry per
/// node of `head_logits`.
pub fn binary_head_loss(head_logits: &[f64], id_ids: &[usize], ood_ids: &[usize]) -> Result<(f64, Vec<f64>)> {
    if id_ids.is_empty() {
        return Err(Error::Empty("ID set for the binary head"));
    }
    if ood_ids.is_empty() {
        return Err(Error::NoPseudoOod);
    }
    let scale = 1.0 / (id_ids.len() + ood_ids.len()) as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; head_logits.len()];
    let labelled = id_ids.iter().map(|&v| (v, 0.0)).chain(ood_ids.iter().map(|&v| (v, 1.0)));
    for (v, target) in labelled {
        let z = head_logits[v];
        loss += if target == 1.0 { softplus(-z) } else { softplus(z) };
        grad[v] += scale * (sigmoid(z) - target);
    }
    Ok((loss * scale, grad))
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Supervised,
    Exposure,
    Kplus1,
    BinaryHead,
}

/// Which loss to train with, and its pseudo-OOD supervision.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub lambda: f64,
    pub s_id: f64,
    pub s_ood: f64,
    pub pseudo_ood: Vec<usize>,
}

impl ObjectiveSpec {
    pub fn supervised() -> Self {
        Self {
            kind: ObjectiveKind::Supervised,
            lambda: 0.0,
            s_id: DEFAULT_S_ID,
            s_ood: DEFAULT_S_OOD,
            pseudo_ood: Vec::new(),
        }
    }

    pub fn exposure(pseudo_ood: Vec<usize>, lambda: f64, s_id: f64, s_ood: f64) -> Self {
        Self {
            kind: ObjectiveKind::Exposure,
            lambda,
            s_id,
            s_ood,
            pseudo_ood,
        }
    }

    pub fn kplus1(pseudo_ood: Vec<usize>) -> Self {
        Self {
            kind: ObjectiveKind::Kplus1,
            pseudo_ood,
            ..Self::supervised()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda {} must be >= 0", self.lambda)));
        }
        if self.kind != ObjectiveKind::Supervised && self.pseudo_ood.is_empty() {
            return Err(Error::NoPseudoOod);
        }
        Ok(())
    }

    /// Number of logit columns the classifier needs for `k` ID classes.
    pub fn output_dim(&self, k: usize) -> usize {
        match self.kind {
            ObjectiveKind::Kplus1 => k + 1,
            _ => k,
        }
    }

    /// Loss and logit gradient for the classifier objective.
    pub fn evaluate(&self, logits: &Array2<f64>, targets: &[Option<usize>], train_ids: &[usize]) -> Result<(f64, Array2<f64>)> {
        match self.kind {
            ObjectiveKind::Supervised | ObjectiveKind::BinaryHead => supervised_loss(logits, targets, train_ids),
            ObjectiveKind::Exposure => combined_loss(
                logits,
                targets,
                train_ids,
                &self.pseudo_ood,
                self.lambda,
                self.s_id,
                self.s_ood,
            ),
            ObjectiveKind::Kplus1 => kplus1_loss(logits, targets, train_ids, &self.pseudo_ood),
        }
    }
}
