//! C-MAPSS ingestion and preprocessing: sensor selection, operating
//! condition detection, per-condition min-max scaling, sliding windows and
//! a synthetic run-to-failure fleet for desk-scale experiments.

mod cmapss;
mod conditions;
mod normalize;
mod sensors;
mod synth;
mod windows;

pub use cmapss::{parse_cmapss, parse_rul_file, write_cmapss, write_rul_file, EngineTrajectory, RAW_SENSORS};
pub use conditions::{cluster_conditions, ConditionTable};
pub use normalize::{apply_normalizer, fit_normalizer, NormalizationStats, Preprocessor};
pub use sensors::{select_sensors, DatasetId};
pub use synth::{synth_generate, SynthConfig, SyntheticFleet, CONSTANT_CHANNELS};
pub use windows::{build_test_set, segment_windows, write_windows_csv, TestSample, WindowSample};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCount { line: usize, expected: usize, found: usize },
    #[error("line {line}, column {column}: `{token}` is not a number")]
    NotNumeric { line: usize, column: usize, token: String },
    #[error("engine {engine}: expected cycle {expected}, found {found}")]
    NonContiguousCycles { engine: u32, expected: usize, found: usize },
    #[error("unknown dataset `{0}` (expected FD001..FD004)")]
    UnknownDataset(String),
    #[error("engine {engine} has no sensor {channel}")]
    MissingChannel { engine: u32, channel: usize },
    #[error("{found} distinct operating conditions exceed the maximum of {max}; check the rounding precision")]
    TooManyConditions { found: usize, max: usize },
    #[error("engine {engine}, cycle {cycle}: operating condition not seen during fitting")]
    UnseenCondition { engine: u32, cycle: usize },
    #[error("{trajectories} test trajectories but {labels} RUL values")]
    LabelCountMismatch { trajectories: usize, labels: usize },
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
