//! The convolutional decoder: two temporal convolutions, a spatial
//! convolution across all channels, pooling, dropout, a third temporal
//! convolution, pooling and a dense softmax head.

mod adam;
mod checkpoint;
pub mod model;
mod scalar;
mod spec;
mod tensor;
mod train;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use model::{dropout_mask, ForwardPass, Gradients, Mode, Model};
pub use scalar::{Precision, Scalar};
pub use spec::{
    infer_shapes, LayerKind, LayerShape, ModelSpec, CONV1_FILTERS, CONV2_FILTERS, CONV3_FILTERS,
    CONV6_FILTERS, FUSED_KERNEL, OUTPUT_CLASSES, POOL, TEMPORAL_KERNEL,
};
pub use tensor::Tensor;
pub use train::{train, trial_accuracy, EpochRecord, Example, History, TrainConfig};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("layer {layer}: {reason}")]
    InvalidShape { layer: usize, reason: String },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("forward cache is stale: parameters changed since it was computed")]
    StaleCache,
    #[error("{labels} labels for a batch of {batch}")]
    LabelCount { labels: usize, batch: usize },
    #[error("label {0} outside the 3-class range")]
    InvalidLabel(usize),
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training diverged (non-finite loss or parameters) at epoch {epoch}, step {step}")]
    Diverged { epoch: usize, step: u64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
