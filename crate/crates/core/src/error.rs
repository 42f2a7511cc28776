use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// No admissible split exists in `(u, v]` under the minimum segment length.
    #[error("segment ({u}, {v}] is too short for the minimum segment length")]
    SegmentTooShort { u: usize, v: usize },

    #[error("n = {n} exceeds the distance cache limit of {cap} observations")]
    TooLarge { n: usize, cap: usize },

    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    ParseNumber {
        row: usize,
        column: String,
        value: String,
    },

    #[error("table has no rows or no feature columns")]
    EmptyTable,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
