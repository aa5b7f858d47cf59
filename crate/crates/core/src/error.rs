use alloc::string::String;

/// Errors raised by the solvers.
///
/// Verification failures are not errors; they are reported as verdicts.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("infeasible step at t = {t}")]
    InfeasibleStep { t: f64 },
    #[error("grid budget exceeded: {points} points (limit {limit})")]
    BudgetExceeded { points: f64, limit: f64 },
    #[error("power undefined: energy is infinite at t = {t}")]
    PowerUndefined { t: f64 },
    #[error("inconsistent chain: {0}")]
    InconsistentChain(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("state outside the energy domain at t = {t}")]
    OutsideDomain { t: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
