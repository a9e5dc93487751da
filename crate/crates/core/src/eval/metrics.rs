//! ID accuracy and threshold-free OOD detection metrics. OOD is the
//! positive class and larger scores mean more OOD.

use std::cmp::Ordering;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Accuracy of `argmax` over the first `num_id_classes` logit columns,
/// ties going to the lowest class index.
pub fn id_accuracy(logits: &Array2<f64>, targets: &[Option<usize>], node_ids: &[usize], num_id_classes: usize) -> Result<f64> {
    if node_ids.is_empty() {
        return Err(Error::Empty("ID evaluation set"));
    }
    if num_id_classes == 0 || num_id_classes > logits.ncols() {
        return Err(Error::Shape(format!(
            "{num_id_classes} ID classes for {} logit columns",
            logits.ncols()
        )));
    }
    let mut correct = 0usize;
    for &v in node_ids {
        let target = targets
            .get(v)
            .copied()
            .flatten()
            .ok_or_else(|| Error::InvalidArgument(format!("node {v} has no ID label")))?;
        if predict(logits, v, num_id_classes) == target {
            correct += 1;
        }
    }
    Ok(correct as f64 / node_ids.len() as f64)
}

pub fn predict(logits: &Array2<f64>, node: usize, num_id_classes: usize) -> usize {
    let row = logits.row(node);
    let mut best = 0;
    for k in 1..num_id_classes {
        if row[k] > row[best] {
            best = k;
        }
    }
    best
}

fn check(id_scores: &[f64], ood_scores: &[f64]) -> Result<()> {
    if id_scores.is_empty() {
        return Err(Error::Empty("ID score set"));
    }
    if ood_scores.is_empty() {
        return Err(Error::Empty("OOD score set"));
    }
    if id_scores.iter().chain(ood_scores).any(|s| s.is_nan()) {
        return Err(Error::NonFinite("scores".into()));
    }
    Ok(())
}

/// `P(s_ood > s_id) + 0.5 · P(s_ood = s_id)` via the Mann-Whitney rank sum
/// with mid-ranks for ties.
pub fn auroc(id_scores: &[f64], ood_scores: &[f64]) -> Result<f64> {
    check(id_scores, ood_scores)?;
    let mut pooled: Vec<(f64, bool)> = id_scores
        .iter()
        .map(|&s| (s, false))
        .chain(ood_scores.iter().map(|&s| (s, true)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Ranks are 1-based; a tie group spanning ranks [lo, hi] gets (lo + hi) / 2.
    // Doubled to stay in integers.
    let mut doubled_rank_sum: u128 = 0;
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start;
        while end + 1 < pooled.len() && pooled[end + 1].0 == pooled[start].0 {
            end += 1;
        }
        let positives = pooled[start..=end].iter().filter(|p| p.1).count() as u128;
        doubled_rank_sum += positives * (start as u128 + 1 + end as u128 + 1);
        start = end + 1;
    }
    let m = ood_scores.len() as u128;
    let n = id_scores.len() as u128;
    let doubled_u = doubled_rank_sum - m * (m + 1);
    Ok(doubled_u as f64 / (2 * m * n) as f64)
}

/// Non-interpolated area under the precision-recall curve: precision at
/// each distinct threshold (descending, ties grouped) weighted by the
/// recall it adds.
pub fn aupr(id_scores: &[f64], ood_scores: &[f64]) -> Result<f64> {
    check(id_scores, ood_scores)?;
    let mut pooled: Vec<(f64, bool)> = id_scores
        .iter()
        .map(|&s| (s, false))
        .chain(ood_scores.iter().map(|&s| (s, true)))
        .collect();
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));

    let positives = ood_scores.len() as f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area = 0.0;
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start;
        while end + 1 < pooled.len() && pooled[end + 1].0 == pooled[start].0 {
            end += 1;
        }
        let group_tp = pooled[start..=end].iter().filter(|p| p.1).count();
        tp += group_tp;
        fp += end + 1 - start - group_tp;
        if group_tp > 0 {
            area += (group_tp as f64 / positives) * (tp as f64 / (tp + fp) as f64);
        }
        start = end + 1;
    }
    Ok(area)
}

/// FPR at the largest threshold that still flags at least 95% of OOD
/// scores (score ≥ threshold counts as flagged).
pub fn fpr_at_95_tpr(id_scores: &[f64], ood_scores: &[f64]) -> Result<f64> {
    check(id_scores, ood_scores)?;
    let mut ood = ood_scores.to_vec();
    ood.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    // ceil(0.95 · m) in integers
    let needed = (95 * ood.len()).div_ceil(100).max(1);
    let threshold = ood[needed - 1];
    let flagged = id_scores.iter().filter(|&&s| s >= threshold).count();
    Ok(flagged as f64 / id_scores.len() as f64)
}
