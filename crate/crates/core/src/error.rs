use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FgrtError {
    #[error("malformed rule: {0}")]
    MalformedRule(String),
    #[error("degenerate feature `{0}`: all values are equal")]
    DegenerateFeature(String),
    #[error("encoding order violated at chain position {position}: {value} < {previous}")]
    EncodingOrder {
        position: usize,
        previous: f64,
        value: f64,
    },
    #[error("degenerate encoding: increments span a zero-width domain")]
    DegenerateEncoding,
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("empty dataset")]
    EmptyData,
    #[error("every feature is degenerate; nothing to learn from")]
    AllFeaturesDegenerate,
    #[error("expected {expected} features, got {actual}")]
    ArityMismatch { expected: usize, actual: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl FgrtError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FgrtError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, FgrtError>;
