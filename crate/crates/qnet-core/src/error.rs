use thiserror::Error;

/// Errors produced by configuration loading, validation and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration document violates an invariant (asymmetric matrix,
    /// out-of-range QBER, missing physics fields, ...).
    #[error("invalid config: {0}")]
    Config(String),

    /// An argument is outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A topology is not feasible for the network it is applied to.
    #[error("infeasible topology: {0}")]
    Infeasible(String),

    /// Exhaustive enumeration would exceed the tractability guard.
    #[error("enumeration guard exceeded: {count} feasible topologies > limit {limit}")]
    EnumerationGuard { count: u128, limit: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
