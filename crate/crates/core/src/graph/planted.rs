//! Seeded synthetic text-attributed graph with Gaussian communities.
//!
//! Each community has one category; embeddings are drawn around the
//! community center and edges follow a stochastic block model. Node texts
//! mention their category by name, so the keyword mock LLM identifies OOD
//! nodes perfectly. A lookup file of embeddings for the keyword mock's
//! generated texts is produced alongside, drawn from the OOD communities.

use super::{save_dataset, DatasetManifest, TextAttributedGraph};
use crate::error::Result;
use crate::llm::write_lookup;
use crate::rng;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// File name of the generated-text embedding lookup.
pub const LOOKUP_FILE: &str = "text_embeddings.jsonl";

pub const CATEGORY_NAMES: [&str; 3] = ["Graph Neural Networks", "Bayesian Inference", "Quantum Computing"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedConfig {
    pub nodes_per_community: usize,
    pub dim: usize,
    /// Edge probability within a community.
    pub p_in: f64,
    /// Edge probability across communities.
    pub p_out: f64,
    /// Distance between the two ID centers along the first axis.
    pub id_separation: f64,
    /// OOD center: (first axis, second axis).
    pub ood_center: (f64, f64),
    pub noise: f64,
    /// Generated texts per OOD category covered by the lookup file.
    pub lookup_per_class: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            nodes_per_community: 200,
            dim: 16,
            p_in: 0.03,
            p_out: 0.004,
            id_separation: 2.0,
            ood_center: (1.0, 3.0),
            noise: 1.0,
            lookup_per_class: 20,
            seed: 7,
        }
    }
}

pub struct PlantedTag {
    pub graph: TextAttributedGraph,
    pub manifest: DatasetManifest,
    /// Texts the keyword mock would generate, with their embeddings.
    pub lookup_texts: Vec<String>,
    pub lookup_vectors: Array2<f32>,
}

fn centers(config: &PlantedConfig) -> Vec<Array1<f64>> {
    let mut c = vec![Array1::zeros(config.dim); 3];
    c[0][0] = config.id_separation / 2.0;
    c[1][0] = -config.id_separation / 2.0;
    c[2][0] = config.ood_center.0;
    if config.dim > 1 {
        c[2][1] = config.ood_center.1;
    }
    c
}

fn draw(center: &Array1<f64>, noise: f64, rng: &mut impl Rng) -> Vec<f32> {
    center.iter().map(|&m| (m + noise * rng.sample::<f64, _>(StandardNormal)) as f32).collect()
}

pub fn planted_tag(config: &PlantedConfig) -> Result<PlantedTag> {
    let per = config.nodes_per_community;
    let n = 3 * per;
    let centers = centers(config);
    let labels: Vec<i64> = (0..n).map(|v| (v / per) as i64).collect();

    let mut feature_rng = rng::stream(config.seed, "planted/features");
    let mut embeddings = Array2::<f32>::zeros((n, config.dim));
    for v in 0..n {
        let row = draw(&centers[labels[v] as usize], config.noise, &mut feature_rng);
        embeddings.row_mut(v).assign(&Array1::from(row));
    }

    let mut edge_rng = rng::stream(config.seed, "planted/edges");
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { config.p_in } else { config.p_out };
            if edge_rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }

    let texts = (0..n)
        .map(|v| {
            let name = CATEGORY_NAMES[labels[v] as usize];
            format!("Study {v} in {name}. A synthetic abstract describing methods and results in {name}.")
        })
        .collect();

    let graph = TextAttributedGraph::new(texts, edges, embeddings, labels)?;
    let manifest = DatasetManifest {
        name: "planted".into(),
        object_kind: "paper".into(),
        category_names: CATEGORY_NAMES.iter().map(|s| s.to_string()).collect(),
        embedding_dim: config.dim,
        node_count: n,
        id_classes: Some(vec![0, 1]),
    };

    let mut lookup_rng = rng::stream(config.seed, "planted/generated");
    let mut lookup_texts = Vec::new();
    let mut lookup_vectors = Array2::<f32>::zeros((config.lookup_per_class, config.dim));
    for i in 1..=config.lookup_per_class {
        let (title, body) = crate::llm::mock_generated_item(CATEGORY_NAMES[2], &manifest.object_kind, i);
        lookup_texts.push(format!("{title}. {body}"));
        lookup_vectors.row_mut(i - 1).assign(&Array1::from(draw(&centers[2], config.noise, &mut lookup_rng)));
    }

    Ok(PlantedTag { graph, manifest, lookup_texts, lookup_vectors })
}

/// Writes the planted dataset and its lookup file into `dir`.
pub fn write_planted(dir: &Path, config: &PlantedConfig) -> Result<PlantedTag> {
    let tag = planted_tag(config)?;
    save_dataset(dir, &tag.graph, &tag.manifest)?;
    write_lookup(&dir.join(LOOKUP_FILE), &tag.lookup_texts, &tag.lookup_vectors)?;
    Ok(tag)
}
