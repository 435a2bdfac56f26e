use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the twin, the learner and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse { path: String, line: usize, reason: String },

    #[error("strategy document: {path}: {reason}")]
    Schema { path: String, reason: String },

    #[error("strategy tree integrity: {0}")]
    Integrity(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("time {t} min is outside the series span [0, {span}]")]
    OutOfRange { t: f64, span: f64 },

    #[error("action {action} is not allowed in the current state")]
    DisallowedAction { action: u32 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the failure stems from user-supplied configuration (exit code 1)
    /// rather than data or runtime trouble (exit code 2).
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidParam { .. } | Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
