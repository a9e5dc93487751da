//! Graph OOD detection on text-attributed graphs with LLM-driven
//! pseudo-OOD exposure.
//!
//! A two-layer GCN is trained on the labeled ID nodes, optionally
//! regularized with pseudo-OOD nodes an LLM either picked out of the
//! unlabeled pool or wrote from scratch, and then scored with post-hoc
//! OOD detectors.

pub mod error;
pub mod eval;
pub mod gcn;
pub mod graph;
pub mod llm;
pub mod objectives;
pub mod rng;
pub mod scoring;

pub use error::{Error, Result};
