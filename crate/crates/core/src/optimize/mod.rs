//! Steepest descent and nonlinear conjugate gradients with a
//! Barzilai–Borwein line search, and a trust-region method with a
//! truncated-CG inner solver.
//!
//! Every solver is deterministic for fixed inputs and records one
//! [`IterationRecord`] per outer iteration.

mod cg;
mod linesearch;
mod tcg;
mod tr;

use std::fmt;
use std::str::FromStr;

use crate::manifold::ManifoldPoint;
use crate::retraction::TransportKind;

pub use cg::{solve_rcg, solve_rsd};
pub use linesearch::{bb_linesearch, BbHistory, LineSearchStep};
pub use tcg::{tcg_subproblem, TcgResult, TcgStop};
pub use tr::solve_rtr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchConfig {
    /// First trial step; `None` means `f(x₀)`.
    pub gamma0: Option<f64>,
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Armijo sufficient-decrease constant.
    pub beta: f64,
    /// Backtracking factor.
    pub delta: f64,
    /// Weight of the nonmonotone reference value.
    pub alpha: f64,
    /// Test Armijo against the nonmonotone reference `c_i` instead of `f(x_i)`.
    pub nonmonotone: bool,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            gamma0: None,
            gamma_min: 1e-15,
            gamma_max: 1e15,
            beta: 1e-4,
            delta: 0.1,
            alpha: 0.85,
            nonmonotone: false,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma_min > 0.0 && self.gamma_min < self.gamma_max) {
            return Err("need 0 < gamma_min < gamma_max".into());
        }
        if !(self.beta > 0.0 && self.beta < 1.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err("beta and delta must lie in (0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err("alpha must lie in [0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BetaRule {
    #[default]
    FletcherReeves,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgConfig {
    /// Restart period; `1` gives steepest descent.
    pub mu: usize,
    pub beta_rule: BetaRule,
    pub transport: TransportKind,
    pub line_search: LineSearchConfig,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            mu: 5,
            beta_rule: BetaRule::FletcherReeves,
            transport: TransportKind::DiffRetraction,
            line_search: LineSearchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustRegionConfig {
    /// Maximal radius; `None` means `√dim`.
    pub q_bar: Option<f64>,
    /// Initial radius; `None` means `q_bar / 8`.
    pub q0: Option<f64>,
    pub rho_prime: f64,
    pub tcg_kappa: f64,
    pub tcg_theta: f64,
    /// `None` means the manifold dimension.
    pub tcg_max_inner: Option<usize>,
}

impl Default for TrustRegionConfig {
    fn default() -> Self {
        Self {
            q_bar: None,
            q0: None,
            rho_prime: 0.1,
            tcg_kappa: 0.1,
            tcg_theta: 1.0,
            tcg_max_inner: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub grad_tol: f64,
    pub min_step: f64,
    pub max_iter: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            min_step: 1e-11,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Rsd,
    Rcg,
    /// Trust region with the exact Riemannian Hessian.
    Rtr1,
    /// Trust region with the projected Euclidean Hessian.
    Rtr2,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Rsd, Method::Rcg, Method::Rtr1, Method::Rtr2];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rsd => "rsd",
            Method::Rcg => "rcg",
            Method::Rtr1 => "rtr1",
            Method::Rtr2 => "rtr2",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rsd" => Ok(Method::Rsd),
            "rcg" => Ok(Method::Rcg),
            "rtr1" => Ok(Method::Rtr1),
            "rtr2" => Ok(Method::Rtr2),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradTol,
    StepTooSmall,
    MaxIter,
    SubproblemFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::GradTol => "grad_tol",
            Termination::StepTooSmall => "step_too_small",
            Termination::MaxIter => "max_iter",
            Termination::SubproblemFailure => "subproblem_failure",
        }
    }

    pub fn is_success(self) -> bool {
        matches!(self, Termination::GradTol | Termination::StepTooSmall)
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

/// State at the start of iteration `iter` and the step taken from it.
///
/// The step fields are `None` on the final record.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub f: f64,
    pub grad_norm: f64,
    /// Accepted line-search step `τ`, or the metric norm of the trust-region step.
    pub step: Option<f64>,
    /// Trust radius used in this iteration.
    pub radius: Option<f64>,
    /// `g(grad f, p)` for line-search methods.
    pub slope: Option<f64>,
    /// Trust-region ratio `ρ`.
    pub rho: Option<f64>,
    pub accepted: Option<bool>,
    /// Line-search trials or inner tCG iterations.
    pub inner: Option<usize>,
    pub elapsed_s: f64,
}

impl IterationRecord {
    fn state(iter: usize, f: f64, grad_norm: f64, elapsed_s: f64) -> Self {
        Self {
            iter,
            f,
            grad_norm,
            step: None,
            radius: None,
            slope: None,
            rho: None,
            accepted: None,
            inner: None,
            elapsed_s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub method: Method,
    pub iterations: Vec<IterationRecord>,
    pub x: ManifoldPoint,
    pub f: f64,
    pub grad_norm: f64,
    /// `‖x⁺x − I‖_F` of the final iterate.
    pub feasibility: f64,
    pub termination: Termination,
    pub wall_seconds: f64,
}

impl RunReport {
    /// Number of outer iterations performed.
    pub fn num_iter(&self) -> usize {
        self.iterations.len().saturating_sub(1)
    }
}
