//! Compact decoder-only attention network over the unified codebook, with
//! exact analytic gradients, AdamW training, and binary checkpoints.
//!
//! One embedding table and one output head cover the whole unified
//! vocabulary; action and text ids share the same representation space.
//! Logits are computed only at supervised (or requested) positions, which
//! is where most of the FLOPs would otherwise go.

mod checkpoint;
mod gradcheck;
mod loss;
mod model;
mod optim;
pub mod scalar;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use gradcheck::{finite_difference_check, GradCheckReport};
pub use loss::{loss_total, BatchLoss};
pub use model::{Model, ModelConfig};
pub use optim::{AdamW, OptimSettings};
pub use scalar::Scalar;
pub use train::{
    prepare_training_sequences, train, EpochMetrics, SampleSequences, TrainLog, TrainSettings,
};
