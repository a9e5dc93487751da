//! Per-seed metric records, aggregation and the results table.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub id_acc: f64,
    pub auroc: f64,
    pub aupr: f64,
    pub fpr_at_95: f64,
}

impl Metrics {
    fn fields(&self) -> [f64; 4] {
        [self.id_acc, self.auroc, self.aupr, self.fpr_at_95]
    }

    fn from_fields(f: [f64; 4]) -> Self {
        Metrics { id_acc: f[0], auroc: f[1], aupr: f[2], fpr_at_95: f[3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: Metrics,
    /// Exposure weight chosen on validation, for exposure methods.
    pub lambda: Option<f64>,
    pub best_epoch: usize,
    pub pseudo_ood_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub score: String,
    pub config_hash: String,
    pub seeds: Vec<SeedRecord>,
    pub mean: Metrics,
    /// Sample standard deviation; absent with a single seed.
    pub std: Option<Metrics>,
}

impl EvalReport {
    pub fn new(method: &str, score: &str, config_hash: &str, seeds: Vec<SeedRecord>) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::Empty("seed records"));
        }
        let n = seeds.len() as f64;
        let mut mean = [0.0; 4];
        for r in &seeds {
            for (m, x) in mean.iter_mut().zip(r.metrics.fields()) {
                *m += x;
            }
        }
        let mean = mean.map(|m| m / n);
        let std = (seeds.len() >= 2).then(|| {
            let mut var = [0.0; 4];
            for r in &seeds {
                for ((v, x), m) in var.iter_mut().zip(r.metrics.fields()).zip(mean) {
                    *v += (x - m) * (x - m) / (n - 1.0);
                }
            }
            Metrics::from_fields(var.map(f64::sqrt))
        });
        Ok(EvalReport {
            method: method.to_owned(),
            score: score.to_owned(),
            config_hash: config_hash.to_owned(),
            seeds,
            mean: Metrics::from_fields(mean),
            std,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }
}

fn cell(mean: f64, std: Option<f64>) -> String {
    match std {
        Some(s) => format!("{:.2} ± {:.2}", 100.0 * mean, 100.0 * s),
        None => format!("{:.2}", 100.0 * mean),
    }
}

/// Markdown table, one row per report, metrics in percent.
pub fn results_table(reports: &[EvalReport]) -> String {
    let mut out = String::from("| Method | Score | ID ACC ↑ | AUROC ↑ | AUPR ↑ | FPR@95 ↓ |\n|---|---|---|---|---|---|\n");
    for r in reports {
        let m = r.mean.fields();
        let s = r.std.map(|s| s.fields());
        let cells: Vec<String> = (0..4).map(|i| cell(m[i], s.map(|s| s[i]))).collect();
        out.push_str(&format!("| {} | {} | {} |\n", r.method, r.score, cells.join(" | ")));
    }
    out
}
