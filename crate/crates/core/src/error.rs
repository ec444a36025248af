use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),
    /// A computed quantity failed an internal sanity check
    /// (e.g. an expectation value with a non-negligible imaginary part).
    #[error("internal consistency error: {0}")]
    Consistency(String),
    /// A named object (expression, state, settings key) does not exist.
    #[error("unknown {kind}: {name}")]
    Unknown { kind: &'static str, name: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
