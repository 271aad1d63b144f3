use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: bad indices, negative or non-finite numbers, shape mismatches.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The request is well-formed but exceeds what an exact routine can enumerate.
    #[error("capability exceeded: {what} needs {required}, limit is {limit}")]
    Capability {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    #[error("agent {0} is not part of this allocation")]
    UnknownAgent(usize),

    /// An online subroutine returned an allocation it was not allowed to make.
    #[error("online algorithm contract violated: {0}")]
    ContractViolation(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
