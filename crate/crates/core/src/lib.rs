//! Riemannian optimization on the symplectic Stiefel manifold
//! `SpSt(2n, 2k) = {U ∈ ℝ^{2n×2k} : UᵀJU = J}` under the right-invariant metric.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hessian;
pub mod io;
pub mod manifold;
pub mod matrix;
pub mod optimize;
pub mod problems;
pub mod retraction;

pub use error::{Result, SpstError};
pub use hessian::HessianKind;
pub use manifold::{ManifoldPoint, TangentVector};
pub use matrix::{DenseMatrix, Seed};
pub use optimize::{Method, RunReport, StoppingRule, Termination};
pub use problems::Objective;
