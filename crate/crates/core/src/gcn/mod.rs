//! Two-layer GCN with hand-derived gradients.

mod adam;
mod gradcheck;
mod model;
mod params;
mod train;

pub use adam::AdamState;
pub use gradcheck::gradient_check;
pub use model::{backward, forward, DropoutMasks, ForwardTrace, Mode};
pub use params::{init_params, read_params, write_params, BinaryHead, GcnParams, ParamSet};
pub use train::{train, train_binary_head, EpochRecord, HeadOutcome, TrainConfig, TrainOutcome, TrainingData};
