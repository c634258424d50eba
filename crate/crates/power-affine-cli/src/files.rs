//! Input documents: system files, vector and matrix files, start vectors.
//!
//! Every numeric field accepts either a JSON number or a decimal string, so
//! a system file can carry entries like `"0.1"` that survive the trip
//! through other tools without a second rounding.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use power_affine::{NonnegMatrix, NonnegVector, PositiveVector, PowerAffineSystem};

use crate::CliError;

/// A number, or a decimal string parsed as one.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Literal(f64),
    Text(String),
}

impl Num {
    pub fn value(&self) -> Result<f64, CliError> {
        match self {
            Num::Literal(x) => Ok(*x),
            Num::Text(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::parse(format!("not a decimal number: {s:?}"))),
        }
    }
}

fn values(nums: &[Num]) -> Result<Vec<f64>, CliError> {
    nums.iter().map(Num::value).collect()
}

/// One self-contained problem instance.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    n: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<Num>>,
    b: Vec<Num>,
    s: Num,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))
}

pub fn load_system(path: &Path) -> Result<PowerAffineSystem, CliError> {
    let text = read(path)?;
    let file: SystemFile = serde_json::from_str(&text)
        .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    if file.a.len() != file.n || file.a.iter().any(|row| row.len() != file.n) {
        return Err(CliError::parse(format!(
            "{}: field \"A\" is not {n}x{n} as field \"n\" declares",
            path.display(),
            n = file.n
        )));
    }
    if file.b.len() != file.n {
        return Err(CliError::parse(format!(
            "{}: field \"b\" has {} entries, expected {}",
            path.display(),
            file.b.len(),
            file.n
        )));
    }
    let rows = file
        .a
        .iter()
        .map(|row| values(row))
        .collect::<Result<Vec<_>, _>>()?;
    let a = NonnegMatrix::from_rows(rows).map_err(CliError::system_data)?;
    let b = PositiveVector::new(values(&file.b)?).map_err(CliError::system_data)?;
    let sys = PowerAffineSystem::new(a, b, file.s.value()?).map_err(CliError::system_data)?;
    Ok(sys)
}

pub fn load_vector(path: &Path) -> Result<PositiveVector, CliError> {
    let text = read(path)?;
    let nums: Vec<Num> = serde_json::from_str(&text)
        .map_err(|e| CliError::parse(format!("{}: expected a JSON array: {e}", path.display())))?;
    PositiveVector::new(values(&nums)?).map_err(CliError::system_data)
}

pub fn load_matrix(path: &Path) -> Result<NonnegMatrix, CliError> {
    let text = read(path)?;
    let rows: Vec<Vec<Num>> = serde_json::from_str(&text).map_err(|e| {
        CliError::parse(format!(
            "{}: expected a JSON array of rows: {e}",
            path.display()
        ))
    })?;
    let rows = rows
        .iter()
        .map(|row| values(row))
        .collect::<Result<Vec<_>, _>>()?;
    NonnegMatrix::from_rows(rows).map_err(CliError::system_data)
}

/// The `y_star` field of a solve report, when the start file is one.
#[derive(Debug, Deserialize)]
struct ReportStart {
    y_star: Vec<Num>,
}

/// Reads a start vector (in y coordinates) from either a bare JSON array or
/// a previously emitted solve report, whose `y_star` field is used. The
/// latter is what makes `solve --start file` resume from an earlier run.
pub fn load_start(path: &Path) -> Result<NonnegVector, CliError> {
    let text = read(path)?;
    let nums = match serde_json::from_str::<ReportStart>(&text) {
        Ok(report) => report.y_star,
        Err(_) => serde_json::from_str::<Vec<Num>>(&text).map_err(|e| {
            CliError::parse(format!(
                "{}: expected a JSON array or a solve report with \"y_star\": {e}",
                path.display()
            ))
        })?,
    };
    NonnegVector::new(values(&nums)?).map_err(CliError::system_data)
}
