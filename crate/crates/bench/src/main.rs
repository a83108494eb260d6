use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spst_bench::{
    default_t_grid, emit_report, exit_code, geodesic_compare, run_experiment, symplectic_spectrum, write_report,
    BenchError, ExperimentConfig, Format, MethodSel, ProblemKind, Tabular,
};
use spst_core::optimize::StoppingRule;
use spst_core::Seed;

/// Riemannian optimization experiments on the symplectic Stiefel manifold.
#[derive(Parser, Debug)]
#[command(name = "spst-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Nearest symplectic matrix to a random normalized target.
    Nearest {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Smallest symplectic eigenvalues of a Williamson test matrix.
    SymplecticEig {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        p: usize,
        /// Position of the Gauss transformation block.
        #[arg(long, default_value_t = 3)]
        l: usize,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Proper symplectic decomposition of a rank-2r snapshot matrix.
    Psd {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        k: usize,
        /// Number of snapshot pairs.
        #[arg(long, default_value_t = 50)]
        m: usize,
        #[arg(long, default_value_t = 20)]
        r: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Feasibility and geodesic distance of both Cayley retractions.
    GeodesicCompare {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug)]
struct OutArgs {
    #[arg(long, env = "SPST_SEED", default_value_t = 7)]
    seed: u64,
    /// Report file; stdout when absent. Iteration logs go next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// rsd, rcg, rtr1, rtr2 or all.
    #[arg(long, default_value = "all")]
    method: MethodSel,
    #[arg(long, default_value_t = 1e-6)]
    grad_tol: f64,
    #[arg(long, default_value_t = 1e-11)]
    min_step: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Restart period of nonlinear CG.
    #[arg(long, default_value_t = 5)]
    mu: usize,
    /// Test Armijo against the nonmonotone reference value.
    #[arg(long)]
    nonmonotone: bool,
    #[command(flatten)]
    out: OutArgs,
}

fn config(problem: ProblemKind, n: usize, k: usize, run: RunArgs) -> ExperimentConfig {
    ExperimentConfig {
        n,
        k,
        method: run.method,
        seed: run.out.seed,
        stop: StoppingRule {
            grad_tol: run.grad_tol,
            min_step: run.min_step,
            max_iter: run.max_iter,
        },
        mu: run.mu,
        nonmonotone: run.nonmonotone,
        out: run.out.out,
        format: run.out.format,
        ..ExperimentConfig::new(problem)
    }
}

fn iteration_path(out: &Path, format: Format) -> PathBuf {
    out.with_extension(format!("iterations.{}", format.extension()))
}

fn emit<T: Tabular>(rows: &[T], format: Format, out: Option<&Path>) -> Result<(), BenchError> {
    match out {
        Some(path) => write_report(rows, format, path),
        None => emit_report(rows, format, io::stdout().lock()),
    }
}

fn run(cli: Cli) -> Result<i32, BenchError> {
    let cfg = match cli.command {
        Command::Nearest { n, k, run } => config(ProblemKind::Nearest, n, k, run),
        Command::SymplecticEig { n, p, l, c, d, run } => ExperimentConfig {
            l,
            c,
            d,
            ..config(ProblemKind::SymplecticEig, n, p, run)
        },
        Command::Psd { n, k, m, r, run } => ExperimentConfig {
            m,
            r,
            ..config(ProblemKind::Psd, n, k, run)
        },
        Command::GeodesicCompare { n, k, out } => {
            let rows = geodesic_compare(n, k, Seed(out.seed), &default_t_grid())?;
            emit(&rows, out.format, out.out.as_deref())?;
            return Ok(0);
        }
    };
    let output = run_experiment(&cfg)?;
    for r in &output.runs {
        eprintln!(
            "{:<5} iter {:>5}  f {:.10e}  |grad| {:.3e}  feas {:.2e}  {}  {:.3}s",
            r.method,
            r.num_iter(),
            r.f,
            r.grad_norm,
            r.feasibility,
            r.termination,
            r.wall_seconds
        );
        if cfg.problem == ProblemKind::SymplecticEig {
            eprintln!("      symplectic eigenvalues {:?}", symplectic_spectrum(&cfg, &r.x)?);
        }
    }
    emit(&output.rows(), cfg.format, cfg.out.as_deref())?;
    if let Some(out) = &cfg.out {
        write_report(&output.iteration_rows(), cfg.format, &iteration_path(out, cfg.format))?;
    }
    Ok(exit_code(&output.runs))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e @ BenchError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
