use thiserror::Error;

/// Failures reported by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A numeric or structural argument violates an operation's precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// The problem definition itself is inconsistent.
    #[error("invalid model: {0}")]
    Model(String),
    /// A coefficient produced a non-finite value during time stepping.
    #[error("numerical blowup at step {step}: {detail}")]
    NumericalBlowup { step: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parameter(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
