//! Metrics, experiment orchestration and result export.

mod experiment;
mod histogram;
mod metrics;
mod report;

pub use experiment::{
    embedding_provider, load_for, open_session, run_experiment, run_seed, sweep_pseudo_count, sweep_table,
    EmbeddingBackend, EmbeddingSettings, ExperimentConfig, LlmBackend, LlmSettings, LoadedDataset, Method,
    Propagation, PseudoOodSource, SeedRun,
};
pub use histogram::{score_histogram, ScoreHistogram};
pub use metrics::{aupr, auroc, fpr_at_95_tpr, id_accuracy, predict};
pub use report::{results_table, EvalReport, Metrics, SeedRecord};
