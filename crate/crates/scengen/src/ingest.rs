//! CSV ingest: load, align, and clean multivariate historical series.
//!
//! Input files are UTF-8 comma-separated with a header row; an optional
//! first column named `timestamp` holds ISO-8601 instants carried as
//! opaque metadata. Missing values are an empty cell or the literal `NA`
//! (case-sensitive) and are tracked as NaN until [`align_and_clean`]
//! resolves them.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::util::format_f64;

/// Name of the optional leading timestamp column.
pub const TIMESTAMP_COLUMN: &str = "timestamp";

/// Expected variable columns for [`load_timeseries_csv`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CsvSchema {
    /// Take every column from the header (excluding a leading
    /// `timestamp` column).
    Infer,
    /// The variable columns must match these names exactly, in order.
    Columns(Vec<String>),
}

/// Row-removal policy for missing values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    DropRow,
    Fail,
}

/// An aligned multivariate dataset: one column per variable, one row per
/// observation. Missing cells are marked NaN until cleaned.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    variable_names: Vec<String>,
    /// Row-major values, `n_obs * n_vars`.
    values: Vec<f64>,
    n_vars: usize,
    timestamps: Option<Vec<String>>,
}

impl Dataset {
    /// Build a dataset from rows. NaN cells are interpreted as missing.
    pub fn from_rows(
        variable_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        timestamps: Option<Vec<String>>,
    ) -> Result<Self> {
        validate_names(&variable_names)?;
        let n_vars = variable_names.len();
        let mut values = Vec::with_capacity(rows.len() * n_vars);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_vars {
                return Err(Error::Data(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    n_vars
                )));
            }
            values.extend_from_slice(row);
        }
        let n_obs = rows.len();
        if let Some(ts) = &timestamps {
            validate_timestamps(ts, n_obs)?;
        }
        Ok(Self {
            variable_names,
            values,
            n_vars,
            timestamps,
        })
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_obs(&self) -> usize {
        self.values.len().checked_div(self.n_vars).unwrap_or(0)
    }

    pub fn timestamps(&self) -> Option<&[String]> {
        self.timestamps.as_deref()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_vars + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_vars..(row + 1) * self.n_vars]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_obs()).map(|i| self.get(i, col)).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .variable_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Data(format!("unknown variable '{name}'")))?;
        Ok(self.column(idx))
    }

    /// True when no cell is marked missing.
    pub fn is_clean(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Project onto a subset of variables, preserving the given order.
    pub fn select(&self, names: &[String]) -> Result<Dataset> {
        let mut indices = Vec::with_capacity(names.len());
        for name in names {
            let idx = self
                .variable_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Data(format!("unknown variable '{name}'")))?;
            indices.push(idx);
        }
        let rows: Vec<Vec<f64>> = (0..self.n_obs())
            .map(|i| indices.iter().map(|&j| self.get(i, j)).collect())
            .collect();
        Dataset::from_rows(names.to_vec(), rows, self.timestamps.clone())
    }

    /// Serialize to CSV with 17-significant-digit decimals so that
    /// reloading reproduces every value bit-exactly. Missing cells are
    /// written as empty.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        if self.timestamps.is_some() {
            out.push_str(TIMESTAMP_COLUMN);
            if self.n_vars > 0 {
                out.push(',');
            }
        }
        out.push_str(&self.variable_names.join(","));
        out.push('\n');
        for i in 0..self.n_obs() {
            if let Some(ts) = &self.timestamps {
                out.push_str(&ts[i]);
                if self.n_vars > 0 {
                    out.push(',');
                }
            }
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                if v.is_finite() {
                    let _ = write!(out, "{}", format_f64(*v));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::util::write_atomic(path, self.to_csv_string().as_bytes())
    }
}

fn validate_names(names: &[String]) -> Result<()> {
    if names.is_empty() {
        return Err(Error::Data("dataset has no variables".into()));
    }
    for (i, name) in names.iter().enumerate() {
        if name.is_empty() {
            return Err(Error::Data(format!("variable {} has an empty name", i + 1)));
        }
        if names[..i].contains(name) {
            return Err(Error::Data(format!("duplicate variable name '{name}'")));
        }
    }
    Ok(())
}

fn validate_timestamps(ts: &[String], n_obs: usize) -> Result<()> {
    if ts.len() != n_obs {
        return Err(Error::Data(format!(
            "{} timestamps for {} rows",
            ts.len(),
            n_obs
        )));
    }
    for w in ts.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Data(format!(
                "timestamps are not strictly increasing: '{}' then '{}'",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Load a multivariate time series from CSV.
///
/// The first header column may be `timestamp`; remaining columns are
/// variables. Empty cells and the literal `NA` mark missing values; any
/// other non-numeric cell is a parse error naming its row and column.
pub fn load_timeseries_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            ),
            _ => Error::Data(format!("cannot read {}: {e}", path.display())),
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(format!("cannot read header of {}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() {
        return Err(Error::Data(format!("{} has no header", path.display())));
    }

    let has_timestamp = headers[0] == TIMESTAMP_COLUMN;
    let variable_names: Vec<String> = if has_timestamp {
        headers[1..].to_vec()
    } else {
        headers.clone()
    };
    if let CsvSchema::Columns(expected) = schema {
        if &variable_names != expected {
            return Err(Error::Data(format!(
                "header of {} does not match the expected schema: found [{}], expected [{}]",
                path.display(),
                variable_names.join(", "),
                expected.join(", ")
            )));
        }
    }
    validate_names(&variable_names)?;

    let n_vars = variable_names.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut timestamps: Vec<String> = Vec::new();
    for (rec_idx, record) in reader.records().enumerate() {
        let row_no = rec_idx + 1;
        let record =
            record.map_err(|e| Error::Data(format!("row {row_no} of {}: {e}", path.display())))?;
        let expected_len = n_vars + usize::from(has_timestamp);
        if record.len() != expected_len {
            return Err(Error::Data(format!(
                "row {row_no} of {} has {} fields, expected {expected_len}",
                path.display(),
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(n_vars);
        for (j, name) in variable_names.iter().enumerate() {
            let raw = record
                .get(j + usize::from(has_timestamp))
                .unwrap_or("")
                .trim();
            row.push(parse_cell(raw, row_no, name)?);
        }
        if has_timestamp {
            timestamps.push(record.get(0).unwrap_or("").trim().to_string());
        }
        rows.push(row);
    }

    Dataset::from_rows(
        variable_names,
        rows,
        if has_timestamp {
            Some(timestamps)
        } else {
            None
        },
    )
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64> {
    if raw.is_empty() || raw == "NA" {
        return Ok(f64::NAN);
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("non-finite value {v}"),
        }),
        Err(_) => Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("cannot parse '{raw}' as a number"),
        }),
    }
}

/// Outcome of [`align_and_clean`].
#[derive(Debug, Clone)]
pub struct CleanOutcome {
    pub dataset: Dataset,
    pub dropped_rows: usize,
}

/// Resolve missing values: under [`MissingPolicy::DropRow`] every row
/// containing a missing cell is removed; under [`MissingPolicy::Fail`]
/// any missing cell is an error naming its row.
pub fn align_and_clean(d: &Dataset, policy: MissingPolicy) -> Result<CleanOutcome> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d.n_obs());
    let mut timestamps: Vec<String> = Vec::new();
    let mut dropped = 0usize;
    for i in 0..d.n_obs() {
        let row = d.row(i);
        match row.iter().position(|v| !v.is_finite()) {
            None => {
                rows.push(row.to_vec());
                if let Some(ts) = d.timestamps() {
                    timestamps.push(ts[i].clone());
                }
            }
            Some(j) => match policy {
                MissingPolicy::DropRow => dropped += 1,
                MissingPolicy::Fail => {
                    return Err(Error::Data(format!(
                        "missing value at row {}, column '{}'",
                        i + 1,
                        d.variable_names()[j]
                    )))
                }
            },
        }
    }
    if rows.len() < 2 {
        return Err(Error::Data(format!(
            "only {} complete rows remain after cleaning; at least 2 are required",
            rows.len()
        )));
    }
    let dataset = Dataset::from_rows(
        d.variable_names().to_vec(),
        rows,
        d.timestamps().map(|_| timestamps),
    )?;
    Ok(CleanOutcome {
        dataset,
        dropped_rows: dropped,
    })
}
