use alloc::string::String;

/// Errors raised by the simulator core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("network too large for exhaustive enumeration: {nodes} nodes (limit {limit})")]
    TooManyNodes { nodes: usize, limit: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("value {value} out of range [{min}, {max}] for {name}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("magnetization is not a unit vector (|m| = {0})")]
    NotUnitVector(f64),
    #[error("integrator step {dt:e} s is not below the time constant {tau:e} s")]
    UnstableIntegrator { dt: f64, tau: f64 },
    #[error("transfer curve fit failed: {0}")]
    FitFailed(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn ensure_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
