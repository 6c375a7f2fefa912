use thiserror::Error;

/// Errors raised by model construction, network evaluation and design.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Exhaustive search refused because the number of decision-function
    /// tuples exceeds the budget.
    #[error("search space of {cardinality} decision-function tuples exceeds budget {budget}")]
    Infeasible { cardinality: u128, budget: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;
