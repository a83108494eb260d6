use std::time::Instant;

use crate::error::{Result, SpstError};
use crate::hessian::{HessianKind, HessianOperator};
use crate::manifold::{metric, ManifoldPoint};
use crate::problems::Objective;
use crate::retraction::CayleyStep;

use super::tcg::tcg_subproblem;
use super::{IterationRecord, Method, RunReport, StoppingRule, Termination, TrustRegionConfig};

/// Riemannian trust-region method with a truncated-CG subproblem solver.
///
/// `ExactMetric` gives R-TR1, `ProjectedEuclidean` gives R-TR2.
pub fn solve_rtr(
    prob: &dyn Objective,
    x0: &ManifoldPoint,
    cfg: &TrustRegionConfig,
    hess_kind: HessianKind,
    stop: &StoppingRule,
) -> Result<RunReport> {
    let method = match hess_kind {
        HessianKind::ExactMetric => Method::Rtr1,
        HessianKind::ProjectedEuclidean => Method::Rtr2,
    };
    let q_bar = cfg.q_bar.unwrap_or_else(|| (x0.dim() as f64).sqrt());
    let mut q = cfg.q0.unwrap_or(q_bar / 8.0);
    if !(q_bar > 0.0 && q > 0.0 && q <= q_bar) {
        return Err(SpstError::InvalidParameter(format!(
            "need 0 < q0 <= q_bar, got q0 = {q}, q_bar = {q_bar}"
        )));
    }
    if !(0.0..0.25).contains(&cfg.rho_prime) {
        return Err(SpstError::InvalidParameter("rho_prime must lie in [0, 1/4)".into()));
    }
    let start = Instant::now();
    let mut x = x0.clone();
    let mut f = prob.cost(x.u());
    let mut op = HessianOperator::new(hess_kind, &x, prob)?;
    let mut records = Vec::new();
    let mut k = 0;
    let termination = loop {
        let grad = op.rgrad();
        let gnorm = metric(grad, grad)?.max(0.0).sqrt();
        let mut rec = IterationRecord::state(k, f, gnorm, start.elapsed().as_secs_f64());
        if gnorm < stop.grad_tol {
            records.push(rec);
            break Termination::GradTol;
        }
        if k >= stop.max_iter {
            records.push(rec);
            break Termination::MaxIter;
        }
        if q < stop.min_step {
            records.push(rec);
            break Termination::StepTooSmall;
        }
        let sub = tcg_subproblem(grad, |d| op.apply(d), q, cfg)?;
        let mdec = sub.model_decrease;
        rec.radius = Some(q);
        rec.inner = Some(sub.inner);
        rec.step = Some(sub.xi.norm());
        if !(mdec > 0.0) {
            records.push(rec);
            break Termination::SubproblemFailure;
        }
        let candidate = match CayleyStep::new(&sub.xi, 1.0) {
            Ok(step) => {
                let fc = prob.cost(step.point().u());
                fc.is_finite().then(|| (step.into_point(), fc))
            }
            Err(SpstError::CayleyPoleHit) => None,
            Err(e) => return Err(e),
        };
        let rho = match &candidate {
            Some((_, fc)) => (f - fc) / mdec.max(1e-15),
            None => f64::NEG_INFINITY,
        };
        if rho < 0.25 {
            q *= 0.25;
        } else if rho > 0.75 && sub.on_boundary {
            q = (2.0 * q).min(q_bar);
        }
        let accept = rho > cfg.rho_prime;
        rec.rho = Some(rho);
        rec.accepted = Some(accept);
        records.push(rec);
        if accept {
            let (xn, fc) = candidate.expect("accepted step has a candidate");
            x = xn;
            f = fc;
            op = HessianOperator::new(hess_kind, &x, prob)?;
        }
        k += 1;
    };
    let last = records.last().expect("at least one record");
    Ok(RunReport {
        method,
        f,
        grad_norm: last.grad_norm,
        feasibility: x.feasibility(),
        x,
        termination,
        wall_seconds: start.elapsed().as_secs_f64(),
        iterations: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::random_point;
    use crate::matrix::Seed;
    use crate::problems::NearestProblem;

    #[test]
    fn both_hessians_converge_on_nearest_problem() {
        let x = random_point(10, 2, Seed(1));
        let prob = NearestProblem::random(10, 2, Seed(2));
        for kind in [HessianKind::ExactMetric, HessianKind::ProjectedEuclidean] {
            let r = solve_rtr(&prob, &x, &TrustRegionConfig::default(), kind, &StoppingRule::default()).unwrap();
            assert_eq!(r.termination, Termination::GradTol, "{kind:?}");
            assert!(r.feasibility <= 1e-10);
            let q_bar = (x.dim() as f64).sqrt();
            for rec in &r.iterations {
                if let Some(q) = rec.radius {
                    assert!(q > 0.0 && q <= q_bar);
                }
            }
        }
    }

    #[test]
    fn accepted_steps_decrease_cost() {
        let x = random_point(8, 2, Seed(3));
        let prob = NearestProblem::random(8, 2, Seed(4));
        let r = solve_rtr(
            &prob,
            &x,
            &TrustRegionConfig::default(),
            HessianKind::ExactMetric,
            &StoppingRule::default(),
        )
        .unwrap();
        for w in r.iterations.windows(2) {
            if w[0].accepted == Some(true) {
                assert!(w[1].f < w[0].f);
            } else {
                assert_eq!(w[1].f, w[0].f);
            }
        }
    }

    #[test]
    fn rejects_bad_radius() {
        let x = random_point(4, 1, Seed(5));
        let prob = NearestProblem::random(4, 1, Seed(6));
        let cfg = TrustRegionConfig {
            q0: Some(100.0),
            ..TrustRegionConfig::default()
        };
        let err = solve_rtr(&prob, &x, &cfg, HessianKind::ExactMetric, &StoppingRule::default()).unwrap_err();
        assert!(matches!(err, SpstError::InvalidParameter(_)));
    }
}
