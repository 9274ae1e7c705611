use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied settings: bounds, enums, sizes.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input table.
    #[error("ingestion error at line {line}: {message}")]
    Ingestion { line: usize, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Numerical failure that survives all recovery attempts.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("attribution method `{method}` failed: {excluded} of {total} rows non-finite")]
    AttributionFailed {
        method: String,
        excluded: usize,
        total: usize,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for configuration problems, 3 for everything
    /// that went wrong while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }
}
