use std::path::PathBuf;

use thiserror::Error;

use crate::tensor::Shape;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid dimension {height}x{width}")]
    InvalidDimension { height: usize, width: usize },

    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: Shape,
        found: Shape,
    },

    #[error("data length {found} does not match grid size {expected}")]
    DataLength { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The acquisition does not satisfy what an operation requires of it
    /// (unsampled calibration region, empty mask, ...).
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("sensitivity estimation failed: {0}")]
    Estimation(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("prior execution failed: {0}")]
    PriorExecution(String),

    #[error("non-finite values after {step} step in iteration {iteration}")]
    Divergence { step: &'static str, iteration: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed file: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
