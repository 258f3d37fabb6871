use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A family, sampler, adversary or experiment description failed validation.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// A size limit guarding an exponential computation was exceeded.
    #[error("{what} is {value}, above the configured cap of {cap}")]
    CapExceeded {
        what: &'static str,
        value: u128,
        cap: u128,
    },

    #[error("{what} {index} out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    /// A state machine was stepped past its horizon.
    #[error("stepped past horizon {0}")]
    HorizonExceeded(usize),

    #[error("expected feedback for {expected} rounds, got {got}")]
    FeedbackMismatch { expected: usize, got: usize },

    #[error("horizon mismatch: {0} vs {1}")]
    HorizonMismatch(usize, usize),

    #[error("operation undefined on the empty family")]
    EmptyFamily,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}
