use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: bad group literal, mismatched dimensions, unknown site and so on.
    #[error("validation error: {0}")]
    Validation(String),
    /// A request the engine deliberately does not handle (open boundaries, impurities on non-Z2 groups).
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A predicted cost or output size exceeds the configured limit.
    #[error("budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
