//! Post-hoc OOD scorers. Every method emits scores oriented so that a
//! larger value means "more likely OOD".

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::objectives::{energy, sigmoid, softmax};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMethod {
    Msp,
    Entropy,
    Energy,
    EnergyProp,
    BinaryHead,
    Kplus1,
}

impl ScoreMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreMethod::Msp => "msp",
            ScoreMethod::Entropy => "entropy",
            ScoreMethod::Energy => "energy",
            ScoreMethod::EnergyProp => "energy_prop",
            ScoreMethod::BinaryHead => "binary_head",
            ScoreMethod::Kplus1 => "kplus1",
        }
    }
}

impl fmt::Display for ScoreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "msp" => ScoreMethod::Msp,
            "entropy" => ScoreMethod::Entropy,
            "energy" => ScoreMethod::Energy,
            "energy_prop" => ScoreMethod::EnergyProp,
            "binary_head" => ScoreMethod::BinaryHead,
            "kplus1" => ScoreMethod::Kplus1,
            other => return Err(Error::InvalidArgument(format!("unknown score method {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OodScoreVector {
    pub method: ScoreMethod,
    pub scores: Vec<f64>,
}

impl OodScoreVector {
    pub fn select(&self, ids: &[usize]) -> Vec<f64> {
        ids.iter().map(|&v| self.scores[v]).collect()
    }
}

fn per_row(logits: &Array2<f64>, method: ScoreMethod, f: impl Fn(ArrayView1<'_, f64>) -> f64) -> OodScoreVector {
    OodScoreVector {
        method,
        scores: logits.rows().into_iter().map(f).collect(),
    }
}

/// `1 - max_k softmax(z)_k`.
pub fn msp_score(logits: &Array2<f64>) -> OodScoreVector {
    per_row(logits, ScoreMethod::Msp, |z| {
        1.0 - softmax(z).into_iter().fold(0.0, f64::max)
    })
}

/// Shannon entropy (nats) of `softmax(z)`.
pub fn entropy_score(logits: &Array2<f64>) -> OodScoreVector {
    per_row(logits, ScoreMethod::Entropy, |z| {
        -softmax(z)
            .into_iter()
            .filter(|&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    })
}

/// `-logsumexp(z)`.
pub fn energy_score(logits: &Array2<f64>) -> OodScoreVector {
    per_row(logits, ScoreMethod::Energy, energy)
}

/// Smooths scores over the graph: `s ← α·s + (1 - α)·P·s`, repeated
/// `iters` times, with `P` row-stochastic.
pub fn propagate_scores(scores: &OodScoreVector, row_stochastic: &NormalizedAdjacency, alpha: f64, iters: usize) -> Result<OodScoreVector> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} not in [0, 1]")));
    }
    if row_stochastic.dim() != scores.scores.len() {
        return Err(Error::Shape(format!(
            "{} scores for a {}-node operator",
            scores.scores.len(),
            row_stochastic.dim()
        )));
    }
    let mut s = scores.scores.clone();
    for _ in 0..iters {
        let smoothed = row_stochastic.mul_vec(&s);
        for (value, neighbour) in s.iter_mut().zip(smoothed) {
            *value = alpha * *value + (1.0 - alpha) * neighbour;
        }
    }
    Ok(OodScoreVector {
        method: ScoreMethod::EnergyProp,
        scores: s,
    })
}

/// `sigmoid(w · φ(x))` per node over hidden features `φ(x)`.
pub fn binary_head_score(hidden: &Array2<f64>, weights: &[f64]) -> Result<OodScoreVector> {
    if hidden.ncols() != weights.len() {
        return Err(Error::Shape(format!(
            "hidden features have {} columns, head has {} weights",
            hidden.ncols(),
            weights.len()
        )));
    }
    let w = ArrayView1::from(weights);
    Ok(per_row(hidden, ScoreMethod::BinaryHead, |h| sigmoid(h.dot(&w))))
}

/// Softmax probability of the extra OOD class (last column).
pub fn kplus1_score(logits: &Array2<f64>) -> OodScoreVector {
    per_row(logits, ScoreMethod::Kplus1, |z| {
        *softmax(z).last().expect("at least one logit column")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::auroc;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn msp_values() {
        let s = msp_score(&array![[0.0, 0.0], [9f64.ln(), 0.0], [100.0, 0.0]]).scores;
        assert_abs_diff_eq!(s[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], 0.1, epsilon = 1e-15);
        assert!(s[2] < 1e-40);
    }

    #[test]
    fn entropy_values() {
        let s = entropy_score(&array![[0.0, 0.0, 0.0], [50.0, -50.0, -50.0]]).scores;
        assert_abs_diff_eq!(s[0], 3f64.ln(), epsilon = 1e-15);
        assert!(s[1] < 1e-40);

        let s = entropy_score(&array![[3f64.ln(), 0.0]]).scores;
        let h = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert_abs_diff_eq!(s[0], h, epsilon = 1e-15);
        assert_abs_diff_eq!(s[0], 0.5623, epsilon = 1e-4);
    }

    #[test]
    fn energy_values() {
        let s = energy_score(&array![[0.0, 0.0], [5.0, 0.0], [7.0, 2.0]]).scores;
        assert_abs_diff_eq!(s[0], -std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], -(5.0 + (-5f64).exp().ln_1p()), epsilon = 1e-12);
        assert_abs_diff_eq!(s[1], -5.0067, epsilon = 1e-4);
        // shift by +2
        assert_abs_diff_eq!(s[2], s[1] - 2.0, epsilon = 1e-12);
    }

    #[test]
    fn propagation_cases() {
        let p = NormalizedAdjacency::row_stochastic_from_edges(2, &[(0, 1)]);
        let s = OodScoreVector {
            method: ScoreMethod::Energy,
            scores: vec![0.0, 1.0],
        };
        assert_eq!(propagate_scores(&s, &p, 0.5, 1).unwrap().scores, vec![0.25, 0.75]);
        assert_eq!(propagate_scores(&s, &p, 0.5, 0).unwrap().scores, s.scores);

        let p = NormalizedAdjacency::row_stochastic_from_edges(4, &[(0, 1), (1, 2), (0, 3)]);
        let flat = OodScoreVector {
            method: ScoreMethod::Energy,
            scores: vec![-2.5; 4],
        };
        for (alpha, iters) in [(0.0, 1), (0.5, 2), (0.9, 7)] {
            let out = propagate_scores(&flat, &p, alpha, iters).unwrap().scores;
            for v in out {
                assert_abs_diff_eq!(v, -2.5, epsilon = 1e-12);
            }
        }
        assert!(propagate_scores(&flat, &p, 1.5, 1).is_err());
    }

    #[test]
    fn propagation_preserves_mean_on_regular_graph() {
        // 8-cycle: P is doubly stochastic
        let edges: Vec<_> = (0..8).map(|i| (i, (i + 1) % 8)).collect();
        let p = NormalizedAdjacency::row_stochastic_from_edges(8, &edges);
        let s = OodScoreVector {
            method: ScoreMethod::Energy,
            scores: (0..8).map(|i| (i * i) as f64 * 0.3 - 1.0).collect(),
        };
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let out = propagate_scores(&s, &p, 0.3, 5).unwrap();
        assert_abs_diff_eq!(mean(&out.scores), mean(&s.scores), epsilon = 1e-12);
    }

    #[test]
    fn binary_head_values() {
        let hidden = array![[0.0, 0.0], [3f64.ln(), 0.0], [1.0, 2.0]];
        let s = binary_head_score(&hidden, &[1.0, 0.5]).unwrap().scores;
        assert_eq!(s[0], 0.5);
        assert_abs_diff_eq!(s[1], 0.75, epsilon = 1e-15);
        assert!(s[2] > s[1]);
        assert!(binary_head_score(&hidden, &[1.0]).is_err());
    }

    #[test]
    fn kplus1_values() {
        let logits = array![[0.0, 0.0, 0.0], [0.0, 0.0, 10.0]];
        let s = kplus1_score(&logits).scores;
        assert_abs_diff_eq!(s[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], 1.0 / (1.0 + 2.0 * (-10f64).exp()), epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], 0.99991, epsilon = 1e-5);
        for (i, row) in logits.rows().into_iter().enumerate() {
            let p = softmax(row);
            assert_abs_diff_eq!(p[0] + p[1] + s[i], 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn orientation_on_planted_logits() {
        // ID nodes: [a, 0] with a in [6, 8]; OOD nodes: [b, 0] with b in [0.5, 2]
        let id: Vec<f64> = (0..10).map(|i| 6.0 + 0.2 * i as f64).collect();
        let ood: Vec<f64> = (0..10).map(|i| 0.5 + 0.15 * i as f64).collect();
        let rows: Vec<f64> = id.iter().chain(&ood).flat_map(|&a| [a, 0.0]).collect();
        let logits = Array2::from_shape_vec((20, 2), rows).unwrap();
        let id_ids: Vec<usize> = (0..10).collect();
        let ood_ids: Vec<usize> = (10..20).collect();
        for scores in [msp_score(&logits), entropy_score(&logits), energy_score(&logits)] {
            let a = auroc(&scores.select(&id_ids), &scores.select(&ood_ids)).unwrap();
            assert_eq!(a, 1.0, "{}", scores.method);
        }
    }

    #[test]
    fn method_names_roundtrip() {
        for m in [
            ScoreMethod::Msp,
            ScoreMethod::Entropy,
            ScoreMethod::Energy,
            ScoreMethod::EnergyProp,
            ScoreMethod::BinaryHead,
            ScoreMethod::Kplus1,
        ] {
            assert_eq!(m.as_str().parse::<ScoreMethod>().unwrap(), m);
        }
    }

    proptest! {
        #[test]
        fn invariant_to_class_permutation(vals in proptest::collection::vec(-10.0f64..10.0, 12), rot in 0usize..3) {
            let logits = Array2::from_shape_vec((4, 3), vals).unwrap();
            let permuted = Array2::from_shape_fn((4, 3), |(i, k)| logits[[i, (k + rot) % 3]]);
            for f in [msp_score, entropy_score, energy_score] {
                let a = f(&logits).scores;
                let b = f(&permuted).scores;
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x - y).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn scorers_are_pure(vals in proptest::collection::vec(-10.0f64..10.0, 6)) {
            let logits = Array2::from_shape_vec((3, 2), vals).unwrap();
            for f in [msp_score, entropy_score, energy_score, kplus1_score] {
                let a: Vec<u64> = f(&logits).scores.iter().map(|v| v.to_bits()).collect();
                let b: Vec<u64> = f(&logits).scores.iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn msp_and_entropy_ranges(vals in proptest::collection::vec(-30.0f64..30.0, 8)) {
            let logits = Array2::from_shape_vec((2, 4), vals).unwrap();
            for s in msp_score(&logits).scores {
                prop_assert!((0.0..=0.75 + 1e-12).contains(&s));
            }
            for s in entropy_score(&logits).scores {
                prop_assert!(s >= -1e-12 && s <= 4f64.ln() + 1e-12);
            }
        }
    }
}
