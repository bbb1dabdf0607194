//! Fit configuration (JSON).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::MissingPolicy;
use crate::pipeline::power::PowerCurve;

/// Dependence-model kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// n-dimensional Gaussian copula sampled by the joint normal transform.
    Jnt,
    /// d-vine pair-copula construction.
    Dvine,
}

fn default_missing_policy() -> MissingPolicy {
    MissingPolicy::DropRow
}

/// Configuration for `fit`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Input CSV path.
    pub input: PathBuf,
    /// Optional subset of variables to model (defaults to every column).
    #[serde(default)]
    pub variables: Option<Vec<String>>,
    /// Dependence model to fit.
    pub model: ModelKind,
    /// Variable ordering for the d-vine path; required when `model` is
    /// `dvine`.
    #[serde(default)]
    pub order: Option<Vec<String>>,
    /// How to handle rows with missing values.
    #[serde(default = "default_missing_policy")]
    pub missing_policy: MissingPolicy,
    /// Optional per-variable power curves, persisted into the bundle and
    /// applied on request at sampling time.
    #[serde(default)]
    pub power_curves: BTreeMap<String, PowerCurve>,
}

impl FitConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: FitConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.model == ModelKind::Dvine && self.order.is_none() {
            return Err(Error::Config(
                "model 'dvine' requires an 'order' listing every variable".into(),
            ));
        }
        for (name, curve) in &self.power_curves {
            curve
                .validate()
                .map_err(|e| Error::Config(format!("power curve for '{name}': {e}")))?;
        }
        Ok(())
    }
}
