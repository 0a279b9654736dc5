use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("singular resonant denominator (|d| = {0:e})")]
    Singularity(f64),
    #[error("search failed: {0}")]
    Search(String),
    #[error("divergent expectation: {0}")]
    Divergence(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
