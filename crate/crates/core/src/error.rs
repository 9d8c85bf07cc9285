use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulation and reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Structured config text could not be parsed.
    #[error("config parse error: {0}")]
    Parse(String),

    /// A config field failed validation. `path` names the offending field,
    /// e.g. `scene.emitters[0].p_emit`.
    #[error("invalid value at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("memory budget exceeded: {required} bytes required, budget is {budget} bytes")]
    ResourceExhausted { required: u64, budget: u64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A binary container was truncated, corrupt, or of an unknown version.
    #[error("malformed file: {0}")]
    Format(String),

    /// An input violates a statistical precondition (too few frames, no
    /// significant peak, a fit that did not converge, ...).
    #[error("statistical precondition failed: {0}")]
    Statistical(String),

    #[error("fit did not converge after {iterations} iterations")]
    FitDidNotConverge { iterations: usize },

    #[error("config digest mismatch between {first} and {second}")]
    DigestMismatch { first: String, second: String },
}

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
