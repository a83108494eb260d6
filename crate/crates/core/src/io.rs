//! Plain-text matrix format: a `rows cols` header line followed by the
//! entries in row-major order, whitespace separated, 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Result, SpstError};
use crate::matrix::DenseMatrix;

/// Scientific notation with 17 significant digits; parses back exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn matrix_to_string(m: &DenseMatrix) -> String {
    let mut s = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|&x| fmt_f64(x)).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

pub fn matrix_from_str(text: &str) -> Result<DenseMatrix> {
    let mut tokens = text.split_whitespace();
    let mut dim = |what: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| SpstError::Parse(format!("missing {what}")))?
            .parse()
            .map_err(|e| SpstError::Parse(format!("bad {what}: {e}")))
    };
    let rows = dim("row count")?;
    let cols = dim("column count")?;
    let data = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| SpstError::Parse(format!("bad entry `{t}`: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if data.len() != rows * cols {
        return Err(SpstError::Parse(format!(
            "expected {} entries, found {}",
            rows * cols,
            data.len()
        )));
    }
    Ok(DenseMatrix::from_vec(rows, cols, data)?)
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    fs::write(path, matrix_to_string(m)).map_err(|e| SpstError::Parse(format!("{}: {e}", path.display())))
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path).map_err(|e| SpstError::Parse(format!("{}: {e}", path.display())))?;
    matrix_from_str(&text)
}
