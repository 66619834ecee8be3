//! CSV matrix files: plain decimal text, one matrix row per line, comma
//! separated, no header. Values are written with Rust's shortest
//! round-trip float formatting, so write-then-read is exact.

use std::fs;
use std::path::Path;

use effattn::matrix::Matrix;

use crate::error::{CliError, CliResult};

pub fn read_matrix(path: &Path) -> CliResult<Matrix> {
    let content = fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, line) in content.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let text = field.trim();
            let value: f64 = text.parse().map_err(|_| {
                CliError::Parse(format!(
                    "{}: line {lineno}: cannot parse '{text}' as a number",
                    path.display()
                ))
            })?;
            if !value.is_finite() {
                return Err(CliError::Parse(format!(
                    "{}: line {lineno}: non-finite value '{text}'",
                    path.display()
                )));
            }
            row.push(value);
        }
        if let Some(w) = width {
            if row.len() != w {
                return Err(CliError::Parse(format!(
                    "{}: line {lineno}: expected {w} columns, found {}",
                    path.display(),
                    row.len()
                )));
            }
        } else {
            width = Some(row.len());
        }
        rows.push(row);
    }
    Matrix::from_rows(&rows).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Single-column CSV: one value per line.
pub fn read_column(path: &Path) -> CliResult<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.cols() != 1 {
        return Err(CliError::Parse(format!(
            "{}: expected a single column, found {}",
            path.display(),
            m.cols()
        )));
    }
    Ok(m.column(0))
}

pub fn format_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: &Matrix) -> CliResult<()> {
    fs::write(path, format_matrix(m))
        .map_err(|e| CliError::Parse(format!("cannot write {}: {e}", path.display())))
}
