use thiserror::Error;

use crate::matrix::LinalgError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpstError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimensions must be even, got {0}x{1}")]
    OddDimension(usize, usize),
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("base point is infeasible (feasibility {0:.3e})")]
    InfeasibleBase(f64),
    #[error("vector is not tangent (residual {0:.3e})")]
    NotTangent(f64),
    #[error("tangent vectors live at different base points")]
    BaseMismatch,
    #[error("Cayley transform hit a pole; shrink the step")]
    CayleyPoleHit,
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("step size {0:.3e} fell below the minimum")]
    StepTooSmall(f64),
    #[error("matrix is not symmetric (asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("eigenvalues failed to pair (relative gap {0:.3e})")]
    PairingFailure(f64),
    #[error("invalid Gauss transformation parameters: {0}")]
    BadGaussParams(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, SpstError>;

impl SpstError {
    /// Map a singular small system inside a Cayley evaluation to a pole hit.
    pub(crate) fn pole(err: LinalgError) -> Self {
        match err {
            LinalgError::SingularMatrix { .. } | LinalgError::NonFinite => SpstError::CayleyPoleHit,
            other => SpstError::Linalg(other),
        }
    }
}
