use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::thread;

use spst_core::hessian::HessianKind;
use spst_core::manifold::{check_point, random_point, random_tangent, selector, ManifoldPoint};
use spst_core::matrix::{DenseMatrix, Seed};
use spst_core::optimize::{
    solve_rcg, solve_rsd, solve_rtr, CgConfig, LineSearchConfig, Method, RunReport, StoppingRule, TrustRegionConfig,
};
use spst_core::problems::{
    brockett_problem, gen_psd_instance, gen_williamson, psd_problem, symplectic_eigs, NearestProblem, Objective,
};
use spst_core::retraction::{cayley_retraction, cayley_simple, geodesic_matrix};
use spst_core::SpstError;

use crate::report::{Format, GeodesicRow, IterationRow, ReportRow};
use crate::{BenchError, Result};

/// Upper bound on `n`; dense `2n × 2n` work beyond this is out of desk reach.
const MAX_N: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Nearest,
    SymplecticEig,
    Psd,
    GeodesicCompare,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Nearest => "nearest",
            ProblemKind::SymplecticEig => "symplectic-eig",
            ProblemKind::Psd => "psd",
            ProblemKind::GeodesicCompare => "geodesic-compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodSel {
    One(Method),
    All,
}

impl MethodSel {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodSel::One(m) => vec![m],
            MethodSel::All => Method::ALL.to_vec(),
        }
    }
}

impl FromStr for MethodSel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            Ok(MethodSel::All)
        } else {
            s.parse().map(MethodSel::One)
        }
    }
}

impl fmt::Display for MethodSel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSel::One(m) => m.fmt(f),
            MethodSel::All => f.write_str("all"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub n: usize,
    /// Column half-width of the iterate; `p` for the eigenvalue problem.
    pub k: usize,
    pub m: usize,
    pub r: usize,
    pub l: usize,
    pub c: f64,
    pub d: f64,
    pub method: MethodSel,
    pub seed: u64,
    pub stop: StoppingRule,
    pub mu: usize,
    pub nonmonotone: bool,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemKind) -> Self {
        let (n, k) = match problem {
            ProblemKind::Nearest | ProblemKind::GeodesicCompare => (100, 10),
            ProblemKind::SymplecticEig => (100, 5),
            ProblemKind::Psd => (100, 20),
        };
        Self {
            problem,
            n,
            k,
            m: 50,
            r: 20,
            l: 3,
            c: 2.0,
            d: 1.0,
            method: MethodSel::All,
            seed: 7,
            stop: StoppingRule::default(),
            mu: CgConfig::default().mu,
            nonmonotone: false,
            out: None,
            format: Format::Csv,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        let (n, k) = (self.n, self.k);
        if n == 0 || n > MAX_N {
            return bad(format!("n must lie in 1..={MAX_N}, got {n}"));
        }
        if k == 0 || k > n {
            return bad(format!("need 1 <= k <= n, got k = {k}, n = {n}"));
        }
        match self.problem {
            ProblemKind::SymplecticEig => {
                if self.l < 2 || self.l > n {
                    return bad(format!("need 2 <= l <= n, got l = {}", self.l));
                }
                if self.c == 0.0 || !self.c.is_finite() || !self.d.is_finite() {
                    return bad(format!(
                        "need finite c != 0 and finite d, got c = {}, d = {}",
                        self.c, self.d
                    ));
                }
            }
            ProblemKind::Psd => {
                if self.r == 0 || self.r > n {
                    return bad(format!("need 1 <= r <= n, got r = {}", self.r));
                }
                if self.m == 0 || self.m > 10 * MAX_N {
                    return bad(format!("m must lie in 1..={}, got {}", 10 * MAX_N, self.m));
                }
            }
            ProblemKind::Nearest | ProblemKind::GeodesicCompare => {}
        }
        let s = &self.stop;
        if !(s.grad_tol > 0.0) || !(s.min_step > 0.0) {
            return bad("grad-tol and min-step must be positive".into());
        }
        if self.mu == 0 {
            return bad("mu must be at least 1".into());
        }
        Ok(())
    }

    fn line_search(&self) -> LineSearchConfig {
        LineSearchConfig {
            nonmonotone: self.nonmonotone,
            ..LineSearchConfig::default()
        }
    }
}

/// Output of [`run_experiment`], runs in [`Method::ALL`] order.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub x0: ManifoldPoint,
    pub runs: Vec<RunReport>,
}

impl ExperimentOutput {
    pub fn rows(&self) -> Vec<ReportRow> {
        self.runs.iter().map(ReportRow::from).collect()
    }

    pub fn iteration_rows(&self) -> Vec<IterationRow> {
        self.runs.iter().flat_map(IterationRow::from_report).collect()
    }
}

struct Instance {
    objective: Box<dyn Objective>,
    x0: ManifoldPoint,
}

fn build(cfg: &ExperimentConfig) -> Result<Instance> {
    let seed = Seed(cfg.seed);
    let (n, k) = (cfg.n, cfg.k);
    let objective: Box<dyn Objective> = match cfg.problem {
        ProblemKind::Nearest => Box::new(NearestProblem::random(n, k, seed.derive(0))),
        ProblemKind::SymplecticEig => {
            let w = gen_williamson(n, cfg.l, cfg.c, cfg.d, seed.derive(0))?;
            Box::new(brockett_problem(w.a)?)
        }
        ProblemKind::Psd => Box::new(psd_problem(gen_psd_instance(n, cfg.m, cfg.r, seed.derive(0))?.s)?),
        ProblemKind::GeodesicCompare => {
            return Err(BenchError::Config("geodesic-compare runs no solver".into()));
        }
    };
    Ok(Instance {
        objective,
        x0: initial_point(cfg)?,
    })
}

/// Shared starting point of every method in an experiment.
///
/// `E` moved along a random tangent for the eigenvalue problem, a random point otherwise.
pub fn initial_point(cfg: &ExperimentConfig) -> Result<ManifoldPoint> {
    let seed = Seed(cfg.seed).derive(1);
    Ok(match cfg.problem {
        ProblemKind::SymplecticEig => {
            let e = ManifoldPoint::new(selector(cfg.n, cfg.k))?;
            cayley_retraction(&random_tangent(&e, seed), 1.0)?
        }
        _ => random_point(cfg.n, cfg.k, seed),
    })
}

fn solve(cfg: &ExperimentConfig, prob: &dyn Objective, x0: &ManifoldPoint, method: Method) -> Result<RunReport> {
    let tr = TrustRegionConfig::default();
    let r = match method {
        Method::Rsd => solve_rsd(prob, x0, &cfg.line_search(), &cfg.stop),
        Method::Rcg => {
            let cg = CgConfig {
                mu: cfg.mu,
                line_search: cfg.line_search(),
                ..CgConfig::default()
            };
            solve_rcg(prob, x0, &cg, &cfg.stop)
        }
        Method::Rtr1 => solve_rtr(prob, x0, &tr, HessianKind::ExactMetric, &cfg.stop),
        Method::Rtr2 => solve_rtr(prob, x0, &tr, HessianKind::ProjectedEuclidean, &cfg.stop),
    };
    Ok(r?)
}

/// Build the instance and run every requested method from the same starting point.
///
/// With several methods the solvers run on separate threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let inst = build(cfg)?;
    let methods = cfg.method.methods();
    let prob = inst.objective.as_ref();
    let x0 = &inst.x0;
    let runs = if methods.len() == 1 {
        vec![solve(cfg, prob, x0, methods[0])?]
    } else {
        thread::scope(|s| {
            let handles: Vec<_> = methods
                .iter()
                .map(|&m| s.spawn(move || solve(cfg, prob, x0, m)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("solver thread panicked"))
                .collect::<Result<Vec<_>>>()
        })?
    };
    Ok(ExperimentOutput {
        x0: inst.x0.clone(),
        runs,
    })
}

/// `0` when every run converged or stalled at the minimal step, `1` otherwise.
pub fn exit_code(runs: &[RunReport]) -> i32 {
    if runs.iter().all(|r| r.termination.is_success()) {
        0
    } else {
        1
    }
}

/// Symplectic eigenvalues of `XᵀAX` at a final iterate of the eigenvalue problem.
pub fn symplectic_spectrum(cfg: &ExperimentConfig, x: &ManifoldPoint) -> Result<Vec<f64>> {
    let w = gen_williamson(cfg.n, cfg.l, cfg.c, cfg.d, Seed(cfg.seed).derive(0))?;
    let mut b = x.u().t_matmul(&(&w.a * x.u()));
    b.symmetrize();
    Ok(symplectic_eigs(&b)?)
}

/// Step sizes `0.01, 0.04, …, 1` followed by `2, 5, 10, 20, 50`.
pub fn default_t_grid() -> Vec<f64> {
    let mut t: Vec<f64> = (0..34).map(|i| 0.01 + 0.03 * i as f64).collect();
    t.extend([2.0, 5.0, 10.0, 20.0, 50.0]);
    t
}

/// Compare both Cayley retractions with the exact geodesic along a unit-norm tangent.
pub fn geodesic_compare(n: usize, k: usize, seed: Seed, t_grid: &[f64]) -> Result<Vec<GeodesicRow>> {
    if k == 0 || k > n || n > MAX_N {
        return Err(BenchError::Config(format!(
            "need 1 <= k <= n <= {MAX_N}, got n = {n}, k = {k}"
        )));
    }
    if t_grid.iter().any(|t| !(*t > 0.0)) || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BenchError::Config(
            "t grid must be positive and strictly ascending".into(),
        ));
    }
    let u = random_point(n, k, seed.derive(0));
    let delta = random_tangent(&u, seed.derive(1));
    let pole_free = |r: spst_core::Result<DenseMatrix>| match r {
        Ok(m) => Ok(Some(m)),
        Err(SpstError::CayleyPoleHit) => Ok(None),
        Err(e) => Err(e),
    };
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let g = geodesic_matrix(&delta, t)?;
        let c1 = pole_free(cayley_simple(&delta, t).map(|p| p.u().clone()))?;
        let c2 = pole_free(cayley_retraction(&delta, t).map(|p| p.u().clone()))?;
        let feas = |m: &DenseMatrix| check_point(m);
        rows.push(GeodesicRow {
            t,
            feas_geodesic: feas(&g)?,
            feas_cay1: c1.as_ref().map(feas).transpose()?,
            feas_cay2: c2.as_ref().map(feas).transpose()?,
            err_cay1: c1.map(|m| (&m - &g).frob_norm()),
            err_cay2: c2.map(|m| (&m - &g).frob_norm()),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(problem: ProblemKind) -> ExperimentConfig {
        ExperimentConfig {
            n: 8,
            k: 2,
            r: 2,
            m: 6,
            ..ExperimentConfig::new(problem)
        }
    }

    #[test]
    fn validation_rejects_bad_ranges() {
        let mut cfg = small(ProblemKind::Nearest);
        cfg.k = 9;
        assert!(matches!(cfg.validate(), Err(BenchError::Config(_))));
        let mut cfg = small(ProblemKind::SymplecticEig);
        cfg.l = 1;
        assert!(cfg.validate().is_err());
        cfg.l = 3;
        cfg.c = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = small(ProblemKind::Psd);
        cfg.r = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = small(ProblemKind::Nearest);
        cfg.mu = 0;
        assert!(cfg.validate().is_err());
        assert!(small(ProblemKind::Psd).validate().is_ok());
    }

    #[test]
    fn all_methods_share_starting_point() {
        for problem in [ProblemKind::Nearest, ProblemKind::SymplecticEig, ProblemKind::Psd] {
            let out = run_experiment(&small(problem)).unwrap();
            assert_eq!(out.runs.len(), 4);
            let f0 = out.runs[0].iterations[0].f;
            for (r, m) in out.runs.iter().zip(Method::ALL) {
                assert_eq!(r.method, m);
                assert_eq!(r.iterations[0].f, f0);
            }
            assert_eq!(exit_code(&out.runs), 0, "{problem:?}");
        }
    }

    #[test]
    fn method_selection_parses() {
        assert_eq!("all".parse::<MethodSel>().unwrap(), MethodSel::All);
        assert_eq!("RTR2".parse::<MethodSel>().unwrap(), MethodSel::One(Method::Rtr2));
        assert!("newton".parse::<MethodSel>().is_err());
    }

    #[test]
    fn geodesic_compare_small() {
        let rows = geodesic_compare(6, 2, Seed(3), &[1e-3, 0.1, 1.0]).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].err_cay1.unwrap() < rows[2].err_cay1.unwrap());
        assert!(rows.iter().all(|r| r.feas_cay2.unwrap() <= 1e-12));
        assert!(geodesic_compare(6, 2, Seed(3), &[0.5, 0.1]).is_err());
    }
}
