use thiserror::Error;

/// Errors produced by spectrum construction, determinant assembly and the oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A geometric or numeric parameter is out of its admissible range.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// The isometry kind does not act on the requested base manifold.
    #[error("isometry {isometry} is not defined on base {base}")]
    IsometryMismatch { isometry: String, base: String },

    /// Form degree outside 0..=dim.
    #[error("form degree {degree} outside 0..={max}")]
    DegreeOutOfRange { degree: usize, max: usize },

    /// A matrix expected to be orthogonal is not (within tolerance).
    #[error("action matrix is not orthogonal: |A^T A - I| = {defect:e}")]
    NotOrthogonal { defect: f64 },

    /// A matrix expected to be symmetric positive definite is not.
    #[error("block is not positive definite")]
    NotPositiveDefinite,

    /// The certified tail bound at the final cutoff exceeds the requested tolerance.
    #[error("truncation failure: tail bound {tail_bound:e} > tolerance {tolerance:e} at cutoff {cutoff}")]
    Truncation {
        cutoff: f64,
        tail_bound: f64,
        tolerance: f64,
    },

    /// A zero eigenvalue reached a place where it would make the result singular.
    #[error("singular input: {0}")]
    Singular(String),

    /// Two computation routes that must agree do not.
    #[error("consistency check `{check}` failed: residual {residual:e} > {tolerance:e}")]
    Inconsistent {
        check: &'static str,
        residual: f64,
        tolerance: f64,
    },

    /// Missing heat-coefficient data for the requested index.
    #[error("heat coefficient a_{0} not available")]
    MissingCoefficient(usize),

    /// An iterative numerical routine failed to converge.
    #[error("no convergence in {0}")]
    NoConvergence(&'static str),

    /// The requested spectrum has no closed-form dual representation.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

pub(crate) fn require_positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {value}")))
    }
}
