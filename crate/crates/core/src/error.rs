use alloc::string::String;

/// Errors raised by the core operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A structural precondition on an argument failed.
    #[error("structural error: {0}")]
    Structural(String),

    /// The requested parameters violate an invariant or admit no instance.
    #[error("parameter-infeasible: {0}")]
    ParameterInfeasible(String),

    /// The oracle budget was spent before the query could be answered.
    #[error("budget exceeded: {budget} distinct queries allowed")]
    BudgetExceeded { budget: usize },

    /// The enumerated support is too large for exact computation.
    #[error("domain too large for exact enumeration ({size} profiles, limit {limit}); use the Monte Carlo estimator")]
    DomainTooLarge { size: u128, limit: u128 },

    /// A precondition of a probabilistic bound does not hold.
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    /// A transformation emitted an allocation that its feasibility mode forbids.
    #[error("feasibility violation: {0}")]
    Infeasible(String),
}
