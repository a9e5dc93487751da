use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("row-count mismatch: {what} has {found} rows, expected {expected}")]
    RowCountMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("edge ({0}, {1}) out of range for {2} nodes")]
    EdgeOutOfRange(usize, usize, usize),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid class split: {0}")]
    ClassSplit(String),

    #[error("insufficient {population} nodes: need {needed}, have {available}")]
    InsufficientNodes {
        population: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("non-finite loss at epoch {epoch} ({objective})")]
    NonFiniteLoss { epoch: usize, objective: String },

    #[error("exposure requested but no pseudo-OOD nodes are available")]
    NoPseudoOod,

    #[error("llm: {0}")]
    Llm(String),

    #[error("no cached response for key {0}")]
    CacheMiss(String),

    #[error("unparseable generation: no complete Title/Abstract pair")]
    UnparseableGeneration,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
