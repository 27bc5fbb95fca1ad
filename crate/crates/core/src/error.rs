use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular channel: bin {bin} has |lambda| = {magnitude:e}")]
    SingularChannel { bin: usize, magnitude: f64 },
    #[error("singular estimation: normal matrix is rank deficient")]
    SingularEstimation,
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("failed to converge: {0}")]
    Convergence(String),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
