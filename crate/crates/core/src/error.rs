use thiserror::Error;

/// Errors surfaced by distortion, quantile, and optimization routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (e.g. t ∉ [0,1]).
    #[error("domain error: {0}")]
    Domain(String),

    /// A constructor received parameters that violate its contract.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An integral diverges; the flag carries the sign of the divergence.
    #[error("non-integrable: diverges to {}", if *.positive { "+inf" } else { "-inf" })]
    NonIntegrable { positive: bool },

    /// An operation that requires a concave distortion received a non-concave one.
    #[error("contract violation: {0}")]
    NotConcave(String),

    /// A generation budget (model count, iteration cap) was exhausted.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    /// An operation over a finite set received an empty one.
    #[error("empty set")]
    EmptySet,

    /// A numerical routine failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
