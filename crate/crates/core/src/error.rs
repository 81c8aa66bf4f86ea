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

    #[error("{path}: {malformed} of {total} records are malformed (limit 10%); first error at line {first_line}: {first_message}")]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
        first_line: u64,
        first_message: String,
    },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid time zone {0:?} (expected UTC, Z or an offset such as +08:00)")]
    TimeZone(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training data must contain both classes")]
    SingleClass,

    #[error("non-finite feature value in row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("{folds} folds requested but the minority class has only {minority} members")]
    TooManyFolds { folds: usize, minority: usize },

    #[error("model file: {0}")]
    Model(String),

    #[error("unsupported model format version {found} (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },

    #[error("prediction and truth user sets differ; missing from predictions: [{}], missing from truth: [{}]", .missing_in_predictions.join(", "), .missing_in_truth.join(", "))]
    KeyMismatch {
        missing_in_predictions: Vec<String>,
        missing_in_truth: Vec<String>,
    },

    #[error("confusion matrix is empty")]
    EmptyConfusion,

    #[error("synthetic generation: {0}")]
    Infeasible(String),

    #[error(
        "round trip mismatch for {user_id}: {feature} drawn bin {drawn}, realized bin {realized}"
    )]
    RoundTrip {
        user_id: String,
        feature: &'static str,
        drawn: usize,
        realized: usize,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
