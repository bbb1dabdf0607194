//! Persisted fit artifact: marginals + dependence model + metadata.
//!
//! Bundles serialize to JSON with every float written at 17 significant
//! digits and parsed with serde_json's round-trip mode, so numeric fields
//! survive save/load bit-exactly and re-sampling a reloaded bundle
//! reproduces the original output byte for byte.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dependence::CopulaCorrelationMatrix;
use crate::error::{Error, Result};
use crate::marginals::EmpiricalMarginal;
use crate::pipeline::power::PowerCurve;
use crate::vine::{build_dvine, DVineSpec};

/// Current bundle format version.
pub const FORMAT_VERSION: u32 = 1;

/// The dependence half of a fitted model.
#[derive(Debug, Clone, PartialEq)]
pub enum DependenceModel {
    Jnt(CopulaCorrelationMatrix),
    Dvine(DVineSpec),
}

impl DependenceModel {
    pub fn n_vars(&self) -> usize {
        match self {
            DependenceModel::Jnt(c) => c.n_vars(),
            DependenceModel::Dvine(s) => s.n_vars(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DependenceModel::Jnt(_) => "jnt",
            DependenceModel::Dvine(_) => "dvine",
        }
    }

    pub fn psd_repaired(&self) -> bool {
        match self {
            DependenceModel::Jnt(c) => c.psd_repaired(),
            DependenceModel::Dvine(_) => false,
        }
    }
}

/// Fit provenance carried with the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    /// Source CSV the model was fitted from.
    pub source: String,
    /// Number of (cleaned) observations used for fitting.
    pub n_obs: usize,
    /// Rows dropped while cleaning.
    pub dropped_rows: usize,
    /// Unix timestamp (seconds) of the fit.
    pub created_at_unix: u64,
}

/// A persisted fit: empirical marginals, a dependence model, optional
/// power curves, and metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub variables: Vec<String>,
    pub marginals: Vec<EmpiricalMarginal>,
    pub dependence: DependenceModel,
    pub power_curves: BTreeMap<String, PowerCurve>,
    pub metadata: FitMetadata,
}

impl ModelBundle {
    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn marginal(&self, name: &str) -> Result<&EmpiricalMarginal> {
        self.marginals
            .iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::Data(format!("variable '{name}' is not in the model")))
    }

    fn validate(&self) -> Result<()> {
        if self.marginals.len() != self.variables.len() {
            return Err(Error::Model(format!(
                "bundle has {} marginals for {} variables",
                self.marginals.len(),
                self.variables.len()
            )));
        }
        for (name, marginal) in self.variables.iter().zip(&self.marginals) {
            if marginal.name() != name {
                return Err(Error::Model(format!(
                    "marginal '{}' does not match variable '{name}'",
                    marginal.name()
                )));
            }
        }
        if self.dependence.n_vars() != self.variables.len() {
            return Err(Error::Model(format!(
                "dependence model covers {} variables, bundle lists {}",
                self.dependence.n_vars(),
                self.variables.len()
            )));
        }
        for name in self.power_curves.keys() {
            if !self.variables.contains(name) {
                return Err(Error::Model(format!(
                    "power curve references unknown variable '{name}'"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let dto = BundleDto::from_bundle(self);
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitFormatter);
        dto.serialize(&mut ser)
            .map_err(|e| Error::Model(format!("cannot serialize bundle: {e}")))?;
        Ok(String::from_utf8(buf).expect("serializer emits UTF-8"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dto: BundleDto = serde_json::from_str(text)
            .map_err(|e| Error::Model(format!("corrupt model bundle: {e}")))?;
        dto.into_bundle()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::util::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// JSON formatter that writes every f64 with 17 significant digits.
struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{}", crate::util::format_f64(value))
    }
}

#[derive(Serialize, Deserialize)]
struct MarginalDto {
    name: String,
    sorted_values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum DependenceDto {
    Jnt {
        names: Vec<String>,
        /// Row-major n x n copula-scale correlation entries.
        copula_matrix: Vec<f64>,
        psd_repaired: bool,
    },
    Dvine {
        /// Path ordering as variable names.
        order: Vec<String>,
        /// Conditional rank correlations per tree level.
        edge_rank_corrs: Vec<Vec<f64>>,
    },
}

#[derive(Serialize, Deserialize)]
struct BundleDto {
    format_version: u32,
    variables: Vec<String>,
    marginals: Vec<MarginalDto>,
    dependence: DependenceDto,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    power_curves: BTreeMap<String, PowerCurve>,
    metadata: FitMetadata,
}

impl BundleDto {
    fn from_bundle(b: &ModelBundle) -> Self {
        let dependence = match &b.dependence {
            DependenceModel::Jnt(c) => DependenceDto::Jnt {
                names: c.names().to_vec(),
                copula_matrix: row_major(c.entries()),
                psd_repaired: c.psd_repaired(),
            },
            DependenceModel::Dvine(s) => DependenceDto::Dvine {
                order: s.order().iter().map(|&i| b.variables[i].clone()).collect(),
                edge_rank_corrs: s.edge_rank_corrs().to_vec(),
            },
        };
        BundleDto {
            format_version: FORMAT_VERSION,
            variables: b.variables.clone(),
            marginals: b
                .marginals
                .iter()
                .map(|m| MarginalDto {
                    name: m.name().to_string(),
                    sorted_values: m.sorted_values().to_vec(),
                })
                .collect(),
            dependence,
            power_curves: b.power_curves.clone(),
            metadata: b.metadata.clone(),
        }
    }

    fn into_bundle(self) -> Result<ModelBundle> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported bundle format version {} (this build reads {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let marginals: Vec<EmpiricalMarginal> = self
            .marginals
            .into_iter()
            .map(|m| EmpiricalMarginal::from_sorted_values(m.name, m.sorted_values))
            .collect::<Result<_>>()?;
        let dependence = match self.dependence {
            DependenceDto::Jnt {
                names,
                copula_matrix,
                psd_repaired,
            } => {
                let n = names.len();
                if copula_matrix.len() != n * n {
                    return Err(Error::Model(format!(
                        "copula matrix has {} entries for {n} variables",
                        copula_matrix.len()
                    )));
                }
                let entries = DMatrix::from_row_slice(n, n, &copula_matrix);
                DependenceModel::Jnt(CopulaCorrelationMatrix::new(names, entries, psd_repaired)?)
            }
            DependenceDto::Dvine {
                order,
                edge_rank_corrs,
            } => {
                let indices: Vec<usize> = order
                    .iter()
                    .map(|name| {
                        self.variables
                            .iter()
                            .position(|v| v == name)
                            .ok_or_else(|| {
                                Error::Model(format!(
                                    "d-vine order names unknown variable '{name}'"
                                ))
                            })
                    })
                    .collect::<Result<_>>()?;
                DependenceModel::Dvine(build_dvine(&indices, &edge_rank_corrs)?)
            }
        };
        let bundle = ModelBundle {
            variables: self.variables,
            marginals,
            dependence,
            power_curves: self.power_curves,
            metadata: self.metadata,
        };
        bundle.validate()?;
        Ok(bundle)
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub(crate) fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
