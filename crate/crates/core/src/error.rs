//! Error types shared across the crate.

use std::path::PathBuf;

/// Errors produced by detectors, preprocessing, and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite coordinate {value} at position {position}")]
    NonFiniteCoordinate { value: f64, position: usize },

    #[error("insufficient points: need at least {required}, have {actual}")]
    InsufficientPoints { required: usize, actual: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("negative distance input: {value}")]
    NegativeDistance { value: f64 },

    #[error("label/point count mismatch: {labels} labels for {points} points")]
    LabelLengthMismatch { labels: usize, points: usize },

    #[error("csv parse error at row {row}, column {column}: {reason}")]
    CsvParse {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("missing column {column:?}")]
    MissingColumn { column: String },

    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("malformed export: {0}")]
    MalformedExport(String),
}

pub type Result<T> = std::result::Result<T, Error>;
