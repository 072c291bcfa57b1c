use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KacError {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A formula was evaluated at one of its poles.
    #[error("pole: {0}")]
    Pole(String),

    /// A numerical procedure failed to produce a trustworthy answer.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl KacError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        KacError::InvalidArgument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        KacError::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, KacError>;
