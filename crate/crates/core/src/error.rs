use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by channel generation, link evaluation and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or malformed. `key` names the offending entry.
    #[error("invalid configuration value for `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("malformed configuration file: {0}")]
    ConfigSyntax(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("malformed tap tensor file: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
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
}

pub type Result<T> = std::result::Result<T, Error>;
