use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, DlaError>;

#[derive(Debug, Error)]
pub enum DlaError {
    #[error("no generative standards")]
    NoStandards,

    #[error("no winners learned")]
    NoWinners,

    #[error("cannot average an empty mismatch vector")]
    EmptyMismatch,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: matrix has {actual} standards, store has {expected}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error(
        "invalid tolerance: rho2 = {rho2}, rho2_lim = {rho2_lim} (need 0 <= rho2 <= rho2_lim <= 1)"
    )]
    InvalidTolerance { rho2: f64, rho2_lim: f64 },

    #[error("ragged rows: row {row} has length {actual}, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        actual: usize,
    },

    #[error("deviant length must be at least 1")]
    ZeroDeviantLength,

    #[error("deviant sequence is empty")]
    EmptySequence,

    #[error("memory store is empty")]
    EmptyMemory,

    #[error("column {column} out of range for width {width}")]
    ColumnOutOfRange { column: usize, width: usize },

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("value {value} outside encodable range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: file contains no data rows", path.display())]
    EmptyFile { path: PathBuf },

    #[error("{dataset}: row {row}, column {column}: {reason}")]
    Parse {
        dataset: String,
        row: usize,
        column: usize,
        reason: String,
    },

    #[error("{dataset}: expected {expected} {what}, found {actual}")]
    Shape {
        dataset: String,
        what: &'static str,
        expected: usize,
        actual: usize,
    },
}

impl DlaError {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        DlaError::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}
