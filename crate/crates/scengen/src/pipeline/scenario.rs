//! Scenario sets on physical scale and their CSV form.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;
use crate::util::format_f64;

/// Where a scenario set came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub master_seed: u64,
    /// Path or identifier of the model bundle that generated the set.
    pub model_ref: String,
    pub generated_at_unix: u64,
}

/// Generated scenarios: one column per variable, one row per scenario,
/// values on physical scale (inside each variable's fitted sample range).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub variables: Vec<String>,
    pub values: SampleMatrix,
    pub provenance: Provenance,
}

impl ScenarioSet {
    pub fn count(&self) -> usize {
        self.values.n_rows()
    }

    /// CSV with a header of variable names and 17-significant-digit
    /// values; output is byte-identical for identical inputs.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.variables.join(","));
        out.push('\n');
        for i in 0..self.values.n_rows() {
            for (j, v) in self.values.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", format_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::util::write_atomic(path, self.to_csv_string().as_bytes())
    }
}

/// Read a scenario CSV (header + numeric rows) back into memory.
pub fn read_scenario_csv(path: &Path) -> Result<(Vec<String>, SampleMatrix)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            ),
            _ => Error::Data(format!("cannot read {}: {e}", path.display())),
        })?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(format!("cannot read header of {}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let n_cols = header.len();
    let mut values = Vec::new();
    let mut n_rows = 0usize;
    for (idx, record) in reader.records().enumerate() {
        let record = record
            .map_err(|e| Error::Data(format!("row {} of {}: {e}", idx + 1, path.display())))?;
        if record.len() != n_cols {
            return Err(Error::Data(format!(
                "row {} of {} has {} fields, expected {n_cols}",
                idx + 1,
                path.display(),
                record.len()
            )));
        }
        for (j, raw) in record.iter().enumerate() {
            let v: f64 = raw.trim().parse().map_err(|_| Error::Parse {
                row: idx + 1,
                column: header[j].clone(),
                message: format!("cannot parse '{raw}' as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: idx + 1,
                    column: header[j].clone(),
                    message: format!("non-finite value {v}"),
                });
            }
            values.push(v);
        }
        n_rows += 1;
    }
    Ok((header, SampleMatrix::from_values(n_rows, n_cols, values)))
}
