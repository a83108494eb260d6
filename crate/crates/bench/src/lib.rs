//! Experiment harness for the symplectic Stiefel optimizers: instance
//! generation, solver runs from a shared starting point, geodesic versus
//! retraction comparisons, and CSV/JSON reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod experiment;
mod report;

use std::path::PathBuf;

pub use experiment::{
    default_t_grid, exit_code, geodesic_compare, initial_point, run_experiment, symplectic_spectrum, ExperimentConfig,
    ExperimentOutput, MethodSel, ProblemKind,
};
pub use report::{
    emit_report, parse_report, write_report, Cell, Format, GeodesicRow, IterationRow, ReportRow, Tabular,
};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] spst_core::SpstError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;
