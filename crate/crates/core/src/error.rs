use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A parameter combination sits on a pole of a closed-form expression.
    #[error("singular parameter: {0}")]
    SingularParameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A quantity that must vanish by construction did not.
    #[error("internal consistency violated: {0}")]
    Consistency(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
