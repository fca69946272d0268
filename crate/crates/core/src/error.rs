use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A matrix or filter that must be inverted is (numerically) singular.
    #[error("numerical singularity: {0}")]
    Singular(String),

    /// An exhaustive search or enumeration would exceed its guard.
    #[error("capacity exceeded: {what} needs {required} evaluations, limit is {limit}; {advice}")]
    Capacity {
        what: &'static str,
        required: u128,
        limit: u128,
        advice: &'static str,
    },

    /// A closed-form expression was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A received permutation is not one of the code's table entries.
    #[error("permutation {0:?} is not in the index-modulation table")]
    PermutationNotInTable(Vec<usize>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("cannot parse configuration: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
