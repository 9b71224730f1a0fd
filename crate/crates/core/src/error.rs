use thiserror::Error;

/// Errors raised by the toolkit.
///
/// `InvalidInput` covers anything the caller could have checked up front;
/// `Numerical` is reserved for failures that only show up while computing.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// True for errors caused by bad inputs rather than by the computation itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::Geometry(_) | Error::Dimension { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
