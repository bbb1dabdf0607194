//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by the scenario-generation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A cell of an input file could not be parsed. `row` is the 1-based
    /// data row (excluding the header), `column` the header name.
    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// Invalid configuration (bad config file, missing required options).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input data violates a precondition (missing values, constant
    /// columns, too few observations, shape mismatches).
    #[error("invalid data: {0}")]
    Data(String),

    /// A numeric argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model operation failed (non-PSD matrix, corrupt bundle,
    /// unsupported format version).
    #[error("model error: {0}")]
    Model(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
