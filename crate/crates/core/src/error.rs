use thiserror::Error;

/// Errors raised by polytope, objective, solver and experiment operations.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The operation is not implemented for this polytope or objective kind.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// An internal invariant broke during a solver run. Always a bug.
    #[error("internal consistency violation: {0}")]
    Inconsistent(String),

    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
