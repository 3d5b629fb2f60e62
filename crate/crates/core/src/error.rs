use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("index {index} out of range 0..{len}")]
    Index { index: usize, len: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("iterate diverged at iteration {iter}")]
    Diverged { iter: usize },

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
