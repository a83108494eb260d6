use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use spst_core::io::fmt_f64;
use spst_core::optimize::{IterationRecord, RunReport};

use crate::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// One output field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Null,
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Null, Cell::Num)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        use serde_json::Value;
        match self {
            Cell::Num(x) if x.is_finite() => {
                Value::Number(serde_json::Number::from_str(&fmt_f64(*x)).expect("formatted float is a JSON number"))
            }
            Cell::Num(_) | Cell::Null => Value::Null,
            Cell::Int(i) => Value::from(*i),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

/// A row type with a fixed column order.
pub trait Tabular {
    const HEADER: &'static [&'static str];
    /// Columns holding wall-clock measurements.
    const TIMING: &'static [&'static str];
    fn cells(&self) -> Vec<Cell>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub num_iter: u64,
    pub wall_seconds: f64,
    pub final_grad_norm: f64,
    pub feasibility: f64,
    pub final_f: f64,
    pub termination: String,
}

impl From<&RunReport> for ReportRow {
    fn from(r: &RunReport) -> Self {
        Self {
            method: r.method.to_string(),
            num_iter: r.num_iter() as u64,
            wall_seconds: r.wall_seconds,
            final_grad_norm: r.grad_norm,
            feasibility: r.feasibility,
            final_f: r.f,
            termination: r.termination.to_string(),
        }
    }
}

impl Tabular for ReportRow {
    const HEADER: &'static [&'static str] = &[
        "method",
        "num_iter",
        "wall_seconds",
        "final_grad_norm",
        "feasibility",
        "final_f",
        "termination",
    ];
    const TIMING: &'static [&'static str] = &["wall_seconds"];

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Text(self.method.clone()),
            Cell::Int(self.num_iter),
            Cell::Num(self.wall_seconds),
            Cell::Num(self.final_grad_norm),
            Cell::Num(self.feasibility),
            Cell::Num(self.final_f),
            Cell::Text(self.termination.clone()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub method: String,
    pub iter: u64,
    pub f: f64,
    pub grad_norm: f64,
    pub step: Option<f64>,
    pub radius: Option<f64>,
    pub slope: Option<f64>,
    pub rho: Option<f64>,
    pub accepted: Option<bool>,
    pub inner: Option<u64>,
    pub elapsed_s: f64,
}

impl IterationRow {
    pub fn new(method: &str, rec: &IterationRecord) -> Self {
        Self {
            method: method.to_string(),
            iter: rec.iter as u64,
            f: rec.f,
            grad_norm: rec.grad_norm,
            step: rec.step,
            radius: rec.radius,
            slope: rec.slope,
            rho: rec.rho,
            accepted: rec.accepted,
            inner: rec.inner.map(|i| i as u64),
            elapsed_s: rec.elapsed_s,
        }
    }

    pub fn from_report(r: &RunReport) -> Vec<Self> {
        let m = r.method.to_string();
        r.iterations.iter().map(|rec| Self::new(&m, rec)).collect()
    }
}

impl Tabular for IterationRow {
    const HEADER: &'static [&'static str] = &[
        "method",
        "iter",
        "f",
        "grad_norm",
        "step",
        "radius",
        "slope",
        "rho",
        "accepted",
        "inner",
        "elapsed_s",
    ];
    const TIMING: &'static [&'static str] = &["elapsed_s"];

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Text(self.method.clone()),
            Cell::Int(self.iter),
            Cell::Num(self.f),
            Cell::Num(self.grad_norm),
            self.step.into(),
            self.radius.into(),
            self.slope.into(),
            self.rho.into(),
            self.accepted.map_or(Cell::Null, Cell::Bool),
            self.inner.map_or(Cell::Null, Cell::Int),
            Cell::Num(self.elapsed_s),
        ]
    }
}

/// Feasibility and distance to the geodesic at one step size.
///
/// Retraction columns are empty when the Cayley transform has a pole at `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicRow {
    pub t: f64,
    pub feas_geodesic: f64,
    pub feas_cay1: Option<f64>,
    pub feas_cay2: Option<f64>,
    pub err_cay1: Option<f64>,
    pub err_cay2: Option<f64>,
}

impl Tabular for GeodesicRow {
    const HEADER: &'static [&'static str] = &["t", "feas_geodesic", "feas_cay1", "feas_cay2", "err_cay1", "err_cay2"];
    const TIMING: &'static [&'static str] = &[];

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Num(self.t),
            Cell::Num(self.feas_geodesic),
            self.feas_cay1.into(),
            self.feas_cay2.into(),
            self.err_cay1.into(),
            self.err_cay2.into(),
        ]
    }
}

/// Write `rows` as CSV (header line first) or as a JSON array of objects.
///
/// Floats carry 17 significant digits; non-finite floats become `null` in JSON.
pub fn emit_report<T: Tabular, W: Write>(rows: &[T], format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(T::HEADER)?;
            for row in rows {
                w.write_record(row.cells().iter().map(Cell::csv))?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
        Format::Json => {
            let arr: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| {
                    let obj: serde_json::Map<String, serde_json::Value> = T::HEADER
                        .iter()
                        .zip(row.cells())
                        .map(|(k, c)| (k.to_string(), c.json()))
                        .collect();
                    serde_json::Value::Object(obj)
                })
                .collect();
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &arr)?;
            writeln!(out).map_err(serde_json::Error::io)?;
        }
    }
    Ok(())
}

pub fn write_report<T: Tabular>(rows: &[T], format: Format, path: &Path) -> Result<()> {
    let io = |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    emit_report(rows, format, &mut w)?;
    w.flush().map_err(io)
}

pub fn parse_report<T: DeserializeOwned>(text: &str, format: Format) -> Result<Vec<T>> {
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            Ok(r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?)
        }
        Format::Json => Ok(serde_json::from_str(text)?),
    }
}
