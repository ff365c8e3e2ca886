use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, lengths or group specs that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    /// An input violated a numerical precondition (unitarity, commutation,
    /// torsion consistency).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The operation was called outside its supported regime.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("degenerate constraint: {0}")]
    Degenerate(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
