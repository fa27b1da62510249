use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum FockError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Two successive refinement levels still disagree by more than the tolerance.
    #[error("quadrature did not converge: last two estimates {previous} and {last} (tol {tol:e})")]
    NotConverged {
        previous: Complex64,
        last: Complex64,
        tol: f64,
    },

    /// The refinement sequence keeps growing; the integral is taken to be infinite.
    #[error("integral diverges: refinement estimates {previous} -> {last}")]
    Divergent { previous: f64, last: f64 },

    #[error("integrand returned a non-finite value at {0:?}")]
    InputDomain(Vec<Complex64>),

    #[error("inadmissible measure: {0}")]
    Inadmissible(String),

    #[error("matrix entry ({row}, {col}): {source}")]
    Entry {
        row: usize,
        col: usize,
        #[source]
        source: Box<FockError>,
    },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("eigensolver residual {residual:e} exceeds bound {bound:e}")]
    Eigensolver { residual: f64, bound: f64 },

    #[error("malformed document: {0}")]
    Schema(String),
}

pub type Result<T, E = FockError> = std::result::Result<T, E>;
