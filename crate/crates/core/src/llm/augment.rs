//! Appending generated nodes to a graph.

use super::generate::GeneratedNode;
use super::{Provenance, PseudoOodMode, PseudoOodSet};
use crate::error::{Error, Result};
use crate::graph::{TextAttributedGraph, NO_LABEL};
use ndarray::{s, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode", content = "k")]
pub enum EdgeMode {
    /// Generated nodes stay isolated apart from their self-loop.
    #[default]
    None,
    /// Each generated node links to its `k` most cosine-similar original nodes.
    Knn(usize),
}

/// The base graph followed by generated nodes `base_nodes..`.
#[derive(Debug, Clone)]
pub struct AugmentedGraph {
    pub graph: TextAttributedGraph,
    pub base_nodes: usize,
}

impl AugmentedGraph {
    pub fn generated_range(&self) -> std::ops::Range<usize> {
        self.base_nodes..self.graph.node_count()
    }
}

fn cosine(a: ArrayView1<f32>, b: ArrayView1<f32>) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b.iter()) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

pub fn augment_graph(
    graph: &TextAttributedGraph,
    generated: &[GeneratedNode],
    edge_mode: EdgeMode,
) -> Result<(AugmentedGraph, PseudoOodSet)> {
    let n = graph.node_count();
    let d = graph.embedding_dim();
    let m = generated.len();
    if let EdgeMode::Knn(k) = edge_mode {
        if k == 0 || k >= n {
            return Err(Error::InvalidArgument(format!("knn needs 1 <= k < {n}, got {k}")));
        }
    }

    let mut embeddings = Array2::<f32>::zeros((n + m, d));
    embeddings.slice_mut(s![..n, ..]).assign(graph.embeddings());
    for (i, node) in generated.iter().enumerate() {
        let row = node
            .embedding
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("generated node {i} has no embedding")))?;
        if row.len() != d {
            return Err(Error::Shape(format!("generated node {i} embedding has {} entries, expected {d}", row.len())));
        }
        embeddings.row_mut(n + i).assign(&ArrayView1::from(row.as_slice()));
    }

    let mut edges = graph.edges().to_vec();
    if let EdgeMode::Knn(k) = edge_mode {
        for i in 0..m {
            let query = embeddings.row(n + i);
            let mut sims: Vec<(f64, usize)> = (0..n).map(|v| (cosine(query, embeddings.row(v)), v)).collect();
            sims.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            edges.extend(sims[..k].iter().map(|&(_, v)| (v, n + i)));
        }
    }

    let mut texts = graph.texts().to_vec();
    texts.extend(generated.iter().map(GeneratedNode::text));
    let mut labels = graph.labels().to_vec();
    labels.extend(std::iter::repeat_n(NO_LABEL, m));

    let augmented = TextAttributedGraph::new(texts, edges, embeddings, labels)?;
    let set = PseudoOodSet {
        mode: PseudoOodMode::Generated,
        node_ids: (n..n + m).collect(),
        provenance: generated
            .iter()
            .enumerate()
            .map(|(i, g)| Provenance::Generation { node_id: n + i, category: g.category.clone(), title: g.title.clone() })
            .collect(),
    };
    Ok((AugmentedGraph { graph: augmented, base_nodes: n }, set))
}
