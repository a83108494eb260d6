use crate::error::{Result, SpstError};
use crate::manifold::{ManifoldPoint, TangentVector};
use crate::matrix::DenseMatrix;
use crate::problems::Objective;
use crate::retraction::CayleyStep;

use super::LineSearchConfig;

/// Barzilai–Borwein bookkeeping carried across iterations.
#[derive(Debug, Clone)]
pub struct BbHistory {
    i: usize,
    gamma: f64,
    x: DenseMatrix,
    grad: DenseMatrix,
    // previous point and gradient differences
    diff: Option<(DenseMatrix, DenseMatrix)>,
    q: f64,
    c: f64,
}

impl BbHistory {
    pub fn new(x0: &ManifoldPoint, grad0: &TangentVector, f0: f64, cfg: &LineSearchConfig) -> Self {
        Self {
            i: 0,
            gamma: cfg.gamma0.unwrap_or(f0),
            x: x0.u().clone(),
            grad: grad0.delta().clone(),
            diff: None,
            q: 1.0,
            c: f0,
        }
    }

    /// Iteration counter `i` of the line search.
    pub fn iteration(&self) -> usize {
        self.i
    }

    /// Nonmonotone reference value `c_i`.
    pub fn reference(&self) -> f64 {
        self.c
    }

    /// Register the accepted iterate and its gradient.
    pub fn advance(&mut self, x: &ManifoldPoint, grad: &TangentVector, f: f64, cfg: &LineSearchConfig) {
        let w = x.u() - &self.x;
        let y = grad.delta() - &self.grad;
        self.diff = Some((w, y));
        self.x = x.u().clone();
        self.grad = grad.delta().clone();
        let q_next = cfg.alpha * self.q + 1.0;
        self.c = (cfg.alpha * self.q * self.c + f) / q_next;
        self.q = q_next;
        self.i += 1;
    }

    /// Clipped initial trial step for the current iteration.
    pub fn initial_step(&mut self, cfg: &LineSearchConfig) -> f64 {
        if let Some((w, y)) = &self.diff {
            let wy = w.frob_dot(y).abs();
            let g = if self.i % 2 == 1 {
                w.frob_dot(w) / wy
            } else {
                wy / y.frob_dot(y)
            };
            if g.is_finite() {
                self.gamma = g;
            } else if g.is_infinite() {
                self.gamma = cfg.gamma_max;
            }
        }
        self.gamma = self.gamma.clamp(cfg.gamma_min, cfg.gamma_max);
        self.gamma
    }
}

/// Accepted step of [`bb_linesearch`].
#[derive(Debug, Clone)]
pub struct LineSearchStep {
    pub tau: f64,
    /// Retraction data at `(x, p, τ)`, reusable for transport.
    pub step: CayleyStep,
    pub f_next: f64,
    pub trials: usize,
}

impl LineSearchStep {
    pub fn x_next(&self) -> &ManifoldPoint {
        self.step.point()
    }
}

/// Backtrack `τ = γ δ^l` from the Barzilai–Borwein guess until the Armijo
/// condition `f(R(τp)) ≤ f_ref + βτ·slope` holds.
///
/// `slope = g(grad f(x), p)` must be negative. A pole of the Cayley
/// transform or a non-finite cost counts as a failed trial.
pub fn bb_linesearch(
    prob: &dyn Objective,
    f_x: f64,
    p: &TangentVector,
    slope: f64,
    history: &mut BbHistory,
    cfg: &LineSearchConfig,
    min_step: f64,
) -> Result<LineSearchStep> {
    let f_ref = if cfg.nonmonotone { history.reference() } else { f_x };
    let mut tau = history.initial_step(cfg);
    let mut trials = 0;
    loop {
        if tau < min_step {
            return Err(SpstError::StepTooSmall(tau));
        }
        trials += 1;
        match CayleyStep::new(p, tau) {
            Ok(step) => {
                let f_next = prob.cost(step.point().u());
                if f_next.is_finite() && f_next <= f_ref + cfg.beta * tau * slope {
                    return Ok(LineSearchStep {
                        tau,
                        step,
                        f_next,
                        trials,
                    });
                }
            }
            Err(SpstError::CayleyPoleHit) => {}
            Err(e) => return Err(e),
        }
        tau *= cfg.delta;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{egrad_to_rgrad, metric, random_point};
    use crate::matrix::Seed;
    use crate::problems::NearestProblem;

    #[test]
    fn first_step_uses_initial_value_and_decreases() {
        let x = random_point(8, 2, Seed(1));
        let prob = NearestProblem::random(8, 2, Seed(2));
        let f0 = prob.cost(x.u());
        let g = egrad_to_rgrad(&x, &prob.egrad(x.u())).unwrap();
        let cfg = LineSearchConfig::default();
        let mut h = BbHistory::new(&x, &g, f0, &cfg);
        assert_eq!(h.clone().initial_step(&cfg), f0);
        let p = g.scale(-1.0);
        let slope = metric(&g, &p).unwrap();
        let out = bb_linesearch(&prob, f0, &p, slope, &mut h, &cfg, 1e-11).unwrap();
        assert!(out.f_next < f0);
        assert!(out.f_next <= f0 + cfg.beta * out.tau * slope);
    }

    #[test]
    fn alternating_bb_formulas() {
        let cfg = LineSearchConfig::default();
        let x = random_point(4, 1, Seed(3));
        let prob = NearestProblem::random(4, 1, Seed(4));
        let g = egrad_to_rgrad(&x, &prob.egrad(x.u())).unwrap();
        let mut h = BbHistory::new(&x, &g, 1.0, &cfg);
        let x1 = random_point(4, 1, Seed(5));
        let g1 = egrad_to_rgrad(&x1, &prob.egrad(x1.u())).unwrap();
        h.advance(&x1, &g1, 0.5, &cfg);
        let w = x1.u() - x.u();
        let y = g1.delta() - g.delta();
        let odd = w.frob_dot(&w) / w.frob_dot(&y).abs();
        assert!((h.initial_step(&cfg) - odd.clamp(1e-15, 1e15)).abs() <= 1e-12 * odd);
        h.advance(&x, &g, 0.4, &cfg);
        let even = w.frob_dot(&y).abs() / y.frob_dot(&y);
        assert!((h.initial_step(&cfg) - even.clamp(1e-15, 1e15)).abs() <= 1e-12 * even);
        // q: 1 → 1.85 → 2.5725
        let c1 = (0.85 * 1.0 + 0.5) / 1.85;
        let c2 = (0.85 * 1.85 * c1 + 0.4) / 2.5725;
        assert!((h.reference() - c2).abs() <= 1e-14);
    }

    #[test]
    fn ascent_direction_fails_with_small_step() {
        let x = random_point(5, 1, Seed(6));
        let prob = NearestProblem::random(5, 1, Seed(7));
        let f0 = prob.cost(x.u());
        let g = egrad_to_rgrad(&x, &prob.egrad(x.u())).unwrap();
        let cfg = LineSearchConfig::default();
        let mut h = BbHistory::new(&x, &g, f0, &cfg);
        // pretend the ascent direction g is a descent direction
        let err = bb_linesearch(&prob, f0, &g, -1.0, &mut h, &cfg, 1e-11).unwrap_err();
        assert!(matches!(err, SpstError::StepTooSmall(_)));
    }
}
