//! Text-attributed graphs: data model, dataset files, propagation
//! operators and the ID/OOD splits.

mod adjacency;
mod io;
pub mod planted;
mod split;

use std::collections::BTreeSet;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adjacency::{CsrMatrix, NormalizedAdjacency};
pub use io::{load_dataset, load_split, save_dataset, save_split};
pub use split::{compute_id_ratio, make_class_split, sample_data_split, ClassSplit, DataSplit, SplitSizes};

/// Label sentinel for nodes without ground truth.
pub const NO_LABEL: i64 = -1;

/// Undirected graph whose nodes carry text and an embedding row.
///
/// Edges are stored once per undirected pair as `(i, j)` with `i < j`,
/// sorted. Self-loops are never stored; the propagation operators add
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct TextAttributedGraph {
    edges: Vec<(usize, usize)>,
    texts: Vec<String>,
    embeddings: Array2<f32>,
    labels: Vec<i64>,
}

impl TextAttributedGraph {
    /// Builds a graph and canonicalizes its edge list (orientation `i < j`,
    /// duplicates and self-loops removed).
    pub fn new(
        texts: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        embeddings: Array2<f32>,
        labels: Vec<i64>,
    ) -> Result<Self> {
        let n = texts.len();
        if embeddings.nrows() != n {
            return Err(Error::RowCountMismatch {
                what: "embeddings",
                expected: n,
                found: embeddings.nrows(),
            });
        }
        if labels.len() != n {
            return Err(Error::RowCountMismatch {
                what: "labels",
                expected: n,
                found: labels.len(),
            });
        }
        if let Some((row, _)) = embeddings
            .rows()
            .into_iter()
            .enumerate()
            .find(|(_, r)| r.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::NonFinite(format!("embedding row {row}")));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l < NO_LABEL) {
            return Err(Error::InvalidArgument(format!("label {bad} is negative")));
        }

        let mut canonical = BTreeSet::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::EdgeOutOfRange(i, j, n));
            }
            if i != j {
                canonical.insert((i.min(j), i.max(j)));
            }
        }

        Ok(Self {
            edges: canonical.into_iter().collect(),
            texts,
            embeddings,
            labels,
        })
    }

    pub fn node_count(&self) -> usize {
        self.texts.len()
    }

    pub fn embedding_dim(&self) -> usize {
        self.embeddings.ncols()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    pub fn embeddings(&self) -> &Array2<f32> {
        &self.embeddings
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    /// Embeddings widened to `f64` for the numeric core.
    pub fn features(&self) -> Array2<f64> {
        self.embeddings.mapv(f64::from)
    }
}

/// Metadata describing a dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    /// Noun used in prompts, e.g. "paper" or "Wikipedia article".
    pub object_kind: String,
    pub category_names: Vec<String>,
    pub embedding_dim: usize,
    pub node_count: usize,
    /// Default ID class list for this dataset, if the converter recorded one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id_classes: Option<Vec<i64>>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 {
            return Err(Error::InvalidArgument("embedding_dim must be > 0".into()));
        }
        if self.category_names.is_empty() {
            return Err(Error::InvalidArgument("manifest lists no categories".into()));
        }
        Ok(())
    }

    pub fn category_name(&self, label: i64) -> Option<&str> {
        usize::try_from(label)
            .ok()
            .and_then(|l| self.category_names.get(l))
            .map(String::as_str)
    }
}
