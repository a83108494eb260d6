use std::time::Instant;

use crate::error::{Result, SpstError};
use crate::manifold::{egrad_to_rgrad, metric, ManifoldPoint};
use crate::problems::Objective;
use crate::retraction::{rescale, transport_proj, TransportKind};

use super::linesearch::{bb_linesearch, BbHistory};
use super::{CgConfig, IterationRecord, LineSearchConfig, Method, RunReport, StoppingRule, Termination};

/// Riemannian steepest descent.
pub fn solve_rsd(
    prob: &dyn Objective,
    x0: &ManifoldPoint,
    cfg: &LineSearchConfig,
    stop: &StoppingRule,
) -> Result<RunReport> {
    let cg = CgConfig {
        mu: 1,
        line_search: *cfg,
        ..CgConfig::default()
    };
    run(prob, x0, &cg, stop, Method::Rsd)
}

/// Riemannian nonlinear conjugate gradients with Fletcher–Reeves `β` and periodic restart.
pub fn solve_rcg(prob: &dyn Objective, x0: &ManifoldPoint, cfg: &CgConfig, stop: &StoppingRule) -> Result<RunReport> {
    run(prob, x0, cfg, stop, Method::Rcg)
}

fn run(
    prob: &dyn Objective,
    x0: &ManifoldPoint,
    cfg: &CgConfig,
    stop: &StoppingRule,
    method: Method,
) -> Result<RunReport> {
    if cfg.mu == 0 {
        return Err(SpstError::InvalidParameter("restart period must be at least 1".into()));
    }
    cfg.line_search.validate().map_err(SpstError::InvalidParameter)?;
    let ls = &cfg.line_search;
    let start = Instant::now();
    let mut x = x0.clone();
    let mut f = prob.cost(x.u());
    let mut grad = egrad_to_rgrad(&x, &prob.egrad(x.u()))?;
    let mut gg = metric(&grad, &grad)?;
    let mut p = grad.scale(-1.0);
    let mut history = BbHistory::new(&x, &grad, f, ls);
    let mut records = Vec::new();
    let mut k = 0;
    let termination = loop {
        let gnorm = gg.max(0.0).sqrt();
        let mut rec = IterationRecord::state(k, f, gnorm, start.elapsed().as_secs_f64());
        if gnorm < stop.grad_tol {
            records.push(rec);
            break Termination::GradTol;
        }
        if k >= stop.max_iter {
            records.push(rec);
            break Termination::MaxIter;
        }
        let mut slope = metric(&grad, &p)?;
        if !(slope < 0.0) {
            p = grad.scale(-1.0);
            slope = -gg;
        }
        let accepted = match bb_linesearch(prob, f, &p, slope, &mut history, ls, stop.min_step) {
            Ok(s) => s,
            Err(SpstError::StepTooSmall(_)) => {
                records.push(rec);
                break Termination::StepTooSmall;
            }
            Err(e) => return Err(e),
        };
        rec.step = Some(accepted.tau);
        rec.slope = Some(slope);
        rec.inner = Some(accepted.trials);
        rec.accepted = Some(true);
        records.push(rec);

        let x_next = accepted.x_next().clone();
        let grad_next = egrad_to_rgrad(&x_next, &prob.egrad(x_next.u()))?;
        let gg_next = metric(&grad_next, &grad_next)?;
        history.advance(&x_next, &grad_next, accepted.f_next, ls);

        let restart = (k + 1) % cfg.mu == 0;
        p = if restart {
            grad_next.scale(-1.0)
        } else {
            let beta = gg_next / gg;
            let moved = match cfg.transport {
                TransportKind::DiffRetraction => accepted.step.isometric_transport(&p),
                TransportKind::Projection => rescale(&p, transport_proj(&x_next, &p)?),
            };
            match moved {
                Ok(tp) => grad_next.lin_comb(-1.0, &tp, beta)?,
                Err(SpstError::ZeroVector) | Err(SpstError::CayleyPoleHit) => grad_next.scale(-1.0),
                Err(e) => return Err(e),
            }
        };
        x = x_next;
        f = accepted.f_next;
        grad = grad_next;
        gg = gg_next;
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
