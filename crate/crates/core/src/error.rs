use std::io;

use crate::telemetry::DecodeError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A value outside the domain an operation accepts.
    #[error("{0}")]
    Domain(String),

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("line {line}: {msg}")]
    Validation { line: u64, msg: String },

    #[error(transparent)]
    Decode(#[from] DecodeError),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
