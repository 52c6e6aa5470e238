use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The entity (or every entity) lacks the history the operation needs.
    #[error("eligibility error: {0}")]
    Eligibility(String),
    /// Input data violates a corpus invariant.
    #[error("validation error: {0}")]
    Validation(String),
    /// Input is well-formed but statistically degenerate (zero variance, collinear).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("coordinate descent did not converge after {sweeps} sweeps (last max coefficient change {max_change:e})")]
    Convergence { sweeps: usize, max_change: f64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(alloc::format!($($arg)*)) };
}
macro_rules! eligibility {
    ($($arg:tt)*) => { $crate::error::Error::Eligibility(alloc::format!($($arg)*)) };
}
macro_rules! validation {
    ($($arg:tt)*) => { $crate::error::Error::Validation(alloc::format!($($arg)*)) };
}
macro_rules! degenerate {
    ($($arg:tt)*) => { $crate::error::Error::Degenerate(alloc::format!($($arg)*)) };
}
pub(crate) use {degenerate, domain, eligibility, validation};
