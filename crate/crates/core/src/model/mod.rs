//! ATS2S assembly: configuration, parameters, the joint forward graph and
//! loss, Adam training, inference and checkpoints.

mod checkpoint;
mod config;
mod forward;
mod gradcheck;
mod loss;
mod params;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{ConfigIssue, FeatureSet, ModelConfig};
pub use gradcheck::check_model_gradients;
pub use forward::{build_forward, forward_pass, infer, predict_batch, Batch, ForwardNodes, ForwardResult};
pub use loss::{joint_loss, joint_loss_graph, LossNodes, LossParts};
pub use params::{init_params, ModelParameters, ModelVars};
pub use train::{fit, window_rmse, EpochRecord, TrainHistory, Trainer};

use crate::numcore::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid model configuration: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Config(Vec<ConfigIssue>),
    #[error("no samples to train or evaluate on")]
    EmptyDataset,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("training diverged at {0}")]
    Divergence(String),
    #[error("checkpoint is missing array `{0}`")]
    MissingArray(String),
    #[error("array `{name}` has shape {found:?}, expected {expected:?}")]
    ArrayShape { name: String, expected: Vec<usize>, found: Vec<usize> },
    #[error("checkpoint has unexpected array `{0}`")]
    UnexpectedArray(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint header: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
