//! Accuracy metrics, per-engine reports and experiment tables.

mod metrics;
mod report;

pub use metrics::{rmse, sample_score, score, ScoreAggregate};
pub use report::{write_config_echo, write_experiment_table, EngineResult, EvalResult, ExperimentRow, EXPERIMENT_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{predictions} predictions but {truths} ground-truth values")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("no samples to evaluate")]
    Empty,
    #[error("non-finite prediction or ground truth")]
    NonFinite,
    #[error("engine {0} appears more than once")]
    DuplicateEngine(u32),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
