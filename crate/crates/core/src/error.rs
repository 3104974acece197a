use thiserror::Error;

/// Failure modes shared across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("singular matrix in {0}")]
    Singular(&'static str),
    /// A symplectic eigenvalue fell below 1 by more than the clamping tolerance.
    #[error("unphysical state: symplectic eigenvalue {0} < 1")]
    Unphysical(f64),
    #[error("{0} did not converge")]
    NonConvergent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
