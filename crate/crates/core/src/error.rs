use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("data file contains no records")]
    EmptyData,

    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    /// `row` counts data records from 1 (header excluded), `column` counts from 1.
    #[error("non-numeric cell '{value}' at row {row}, column {column}")]
    NonNumeric {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown generator '{0}'")]
    UnknownGenerator(String),

    #[error("underdetermined system: {n} samples for {p} features")]
    Underdetermined { n: usize, p: usize },

    #[error("training diverged at epoch {epoch} (non-finite risk)")]
    Diverged { epoch: usize },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("unsupported model format version {found} (this build reads up to {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
