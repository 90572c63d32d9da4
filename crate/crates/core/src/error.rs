use thiserror::Error;

/// Errors produced by the evaluators, sweeps and fitters in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A coordinate or parameter fell outside the domain an operation is defined on.
    #[error("domain violation: {0}")]
    DomainViolation(String),

    /// The lattice rule produced no point for the requested resolution and margin.
    #[error("grid is empty: {0}")]
    EmptyGrid(String),

    /// The two design columns of a fit are numerically dependent on the sample set.
    #[error("singular design matrix (condition estimate {condition:e})")]
    SingularDesign { condition: f64 },

    /// An injected perturbation exceeded the budget of its level.
    #[error("perturbation at level {level} is {value:e}, budget is {budget:e}")]
    BudgetViolation { level: usize, value: f64, budget: f64 },

    /// A log-log slope was requested over data that contains a zero or non-finite value.
    #[error("slope undefined: {0}")]
    SlopeUndefined(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::DomainViolation(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
