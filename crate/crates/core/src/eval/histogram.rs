//! Fixed-width histograms of ID and OOD scores on a shared axis.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHistogram {
    /// `bins + 1` edges spanning the pooled score range.
    pub edges: Vec<f64>,
    pub id_counts: Vec<usize>,
    pub ood_counts: Vec<usize>,
}

pub fn score_histogram(id_scores: &[f64], ood_scores: &[f64], bins: usize) -> Result<ScoreHistogram> {
    if bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    if id_scores.is_empty() && ood_scores.is_empty() {
        return Err(Error::Empty("score set"));
    }
    if id_scores.iter().chain(ood_scores).any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores".into()));
    }
    let lo = id_scores.iter().chain(ood_scores).copied().fold(f64::INFINITY, f64::min);
    let hi = id_scores.iter().chain(ood_scores).copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|i| if i == bins { hi } else { lo + width * i as f64 }).collect();
    let bin = |s: f64| {
        if width == 0.0 {
            0
        } else {
            (((s - lo) / width) as usize).min(bins - 1)
        }
    };
    let count = |scores: &[f64]| {
        let mut c = vec![0; bins];
        for &s in scores {
            c[bin(s)] += 1;
        }
        c
    };
    Ok(ScoreHistogram { edges, id_counts: count(id_scores), ood_counts: count(ood_scores) })
}

impl ScoreHistogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin,lower,upper,id_count,ood_count\n");
        for i in 0..self.id_counts.len() {
            out.push_str(&format!(
                "{i},{},{},{},{}\n",
                self.edges[i],
                self.edges[i + 1],
                self.id_counts[i],
                self.ood_counts[i]
            ));
        }
        out
    }
}
