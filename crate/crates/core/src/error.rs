use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("label {label} is outside the support of the {family} family")]
    Domain { family: &'static str, label: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {dim} for {what} (limit {limit})")]
    UnsupportedDimension {
        what: &'static str,
        dim: usize,
        limit: usize,
    },

    #[error("{operation} did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NoConvergence {
        operation: &'static str,
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("numerical underflow in {0}: all weights are -inf")]
    Underflow(&'static str),

    #[error("quadrature box too small in {operation}: boundary mass ratio {ratio:e}")]
    Accuracy { operation: &'static str, ratio: f64 },

    #[error("strong convexity unavailable: m(b) = {0} for the requested b")]
    StrongConvexityUnavailable(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Whether the failure comes from numerics rather than from caller input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::Underflow(_) | Error::Accuracy { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite, got {v}")))
    }
}

pub(crate) fn ensure_finite_slice(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} has non-finite entries")))
    }
}
