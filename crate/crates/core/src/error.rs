use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tally is empty (no mass deposited)")]
    EmptyTally,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An analytic quantity came out outside the range roundoff can explain.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
