//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FiError {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Integer overflow or a value outside the supported numeric range.
    #[error("range error: {0}")]
    Range(String),
    /// The request would exceed a configured size or memory cap.
    #[error("capacity error: {0}")]
    Capacity(String),
    /// A numerical claim checked at runtime did not hold.
    #[error("assertion failed: {0}")]
    Assertion(String),
    /// Reading or writing the on-disk cache failed.
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, FiError>;

impl From<std::io::Error> for FiError {
    fn from(e: std::io::Error) -> Self {
        FiError::Io(e.to_string())
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(FiError::Domain(msg.into()))
}
