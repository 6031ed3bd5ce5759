use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator, the analysis routines and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("hierarchy with {levels} levels and branching {branching} overflows the node index range")]
    HierarchyOverflow { levels: usize, branching: usize },

    #[error("series of length {len} is too short (need more than {needed})")]
    SeriesTooShort { len: usize, needed: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-positive price {value} at index {index}")]
    NonPositivePrice { index: usize, value: f64 },

    #[error("sample size {0} is below the smallest tabulated critical-value row (100)")]
    SampleBelowTable(usize),

    #[error("baseline ensemble has {0} runs, at least 50 are required")]
    BaselineTooSmall(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the user's configuration rather than a runtime failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::HierarchyOverflow { .. }
                | Error::Config(_)
                | Error::Parse { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
