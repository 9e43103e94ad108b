use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the inputs was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A numerical procedure failed to converge or broke down.
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    /// The time integration produced a non-finite state.
    #[error("divergence at step {step} (t = {time}): non-finite state")]
    Divergence { step: usize, time: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn numeric(msg: impl Into<String>) -> Error {
    Error::NumericFailure(msg.into())
}
