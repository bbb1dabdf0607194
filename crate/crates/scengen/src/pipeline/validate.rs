//! Scenario validation against a fitted model.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dependence::copula_sigma_to_rank;
use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;
use crate::pipeline::bundle::{DependenceModel, ModelBundle};
use crate::pipeline::stats::{ks_two_sample, sample_spearman_matrix};
use crate::vine::implied_copula_matrix;

/// Default acceptance threshold on the per-variable KS statistic.
pub const DEFAULT_KS_MAX: f64 = 0.05;

/// Default acceptance threshold on the maximum Spearman deviation.
pub const DEFAULT_RANK_MAX: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct MatrixReport {
    pub names: Vec<String>,
    /// Row-major entries.
    pub entries: Vec<f64>,
}

impl MatrixReport {
    fn new(names: &[String], m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(m[(i, j)]);
            }
        }
        Self {
            names: names.to_vec(),
            entries,
        }
    }
}

/// Result of validating a scenario set against its model: per-variable
/// goodness of fit plus rank-correlation recovery.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    /// Two-sample KS statistic of each scenario column against the
    /// marginal's fitting sample.
    pub per_variable_ks: Vec<VariableKs>,
    pub target_spearman: MatrixReport,
    pub recovered_spearman: MatrixReport,
    /// Maximum absolute off-diagonal difference between target and
    /// recovered Spearman matrices.
    pub max_abs_spearman_deviation: f64,
    pub psd_repaired: bool,
    /// Master seed of the scenario set when known (CSV input carries no
    /// provenance).
    pub seed: Option<u64>,
    pub n_scenarios: usize,
    pub n_fit_observations: usize,
    pub ks_max: f64,
    pub rank_max: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariableKs {
    pub variable: String,
    pub ks: f64,
}

/// The rank-correlation matrix a bundle's dependence model targets.
pub fn target_rank_matrix(bundle: &ModelBundle) -> Result<DMatrix<f64>> {
    match &bundle.dependence {
        DependenceModel::Jnt(copula) => {
            let n = copula.n_vars();
            let mut out = DMatrix::identity(n, n);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        out[(i, j)] = copula_sigma_to_rank(copula.get(i, j))?;
                    }
                }
            }
            Ok(out)
        }
        DependenceModel::Dvine(spec) => {
            let sigma = implied_copula_matrix(spec)?;
            let n = sigma.nrows();
            let mut out = DMatrix::identity(n, n);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        out[(i, j)] = copula_sigma_to_rank(sigma[(i, j)])?;
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Validate scenarios (physical scale) against the model that claims to
/// have generated them.
pub fn validate_scenarios(
    bundle: &ModelBundle,
    scenario_names: &[String],
    scenarios: &SampleMatrix,
    ks_max: f64,
    rank_max: f64,
    seed: Option<u64>,
) -> Result<ValidationReport> {
    if scenario_names != bundle.variables.as_slice() {
        return Err(Error::Data(format!(
            "scenario columns [{}] do not match the model's variables [{}]",
            scenario_names.join(", "),
            bundle.variables.join(", ")
        )));
    }
    if scenarios.n_rows() < 3 {
        return Err(Error::Data(
            "validation needs at least 3 scenario rows".into(),
        ));
    }

    let mut per_variable_ks = Vec::with_capacity(bundle.n_vars());
    for (j, name) in bundle.variables.iter().enumerate() {
        let ks = ks_two_sample(&scenarios.column(j), bundle.marginals[j].sorted_values())?;
        per_variable_ks.push(VariableKs {
            variable: name.clone(),
            ks,
        });
    }

    let target = target_rank_matrix(bundle)?;
    let recovered = sample_spearman_matrix(scenarios)?;
    let n = bundle.n_vars();
    let mut deviation: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            deviation = deviation.max((target[(i, j)] - recovered[(i, j)]).abs());
        }
    }

    let passed = per_variable_ks.iter().all(|v| v.ks <= ks_max) && deviation <= rank_max;
    Ok(ValidationReport {
        per_variable_ks,
        target_spearman: MatrixReport::new(&bundle.variables, &target),
        recovered_spearman: MatrixReport::new(&bundle.variables, &recovered),
        max_abs_spearman_deviation: deviation,
        psd_repaired: bundle.dependence.psd_repaired(),
        seed,
        n_scenarios: scenarios.n_rows(),
        n_fit_observations: bundle.metadata.n_obs,
        ks_max,
        rank_max,
        passed,
    })
}

impl ValidationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::{spearman_matrix, to_copula_matrix};
    use crate::ingest::Dataset;
    use crate::marginals::EmpiricalMarginal;
    use crate::pipeline::bundle::{FitMetadata, ModelBundle};
    use std::collections::BTreeMap;

    fn bundle_from_rows(rows: Vec<Vec<f64>>) -> (ModelBundle, Dataset) {
        let names = vec!["a".to_string(), "b".to_string()];
        let d = Dataset::from_rows(names.clone(), rows, None).unwrap();
        let rank = spearman_matrix(&d).unwrap();
        let copula = to_copula_matrix(&rank).unwrap();
        let marginals = names
            .iter()
            .enumerate()
            .map(|(j, n)| EmpiricalMarginal::fit(n.clone(), &d.column(j)).unwrap())
            .collect();
        let bundle = ModelBundle {
            variables: names,
            marginals,
            dependence: DependenceModel::Jnt(copula),
            power_curves: BTreeMap::new(),
            metadata: FitMetadata {
                source: "mem".into(),
                n_obs: d.n_obs(),
                dropped_rows: 0,
                created_at_unix: 0,
            },
        };
        (bundle, d)
    }

    #[test]
    fn replaying_the_fitting_data_validates_cleanly() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.3;
                vec![t.sin() * 3.0 + t * 0.1, t.cos() + 0.05 * t * t]
            })
            .collect();
        let (bundle, d) = bundle_from_rows(rows);
        let n = d.n_obs();
        let values: Vec<f64> = (0..n).flat_map(|i| d.row(i).to_vec()).collect();
        let scenarios = SampleMatrix::from_values(n, 2, values);
        let report = validate_scenarios(
            &bundle,
            &bundle.variables,
            &scenarios,
            DEFAULT_KS_MAX,
            DEFAULT_RANK_MAX,
            None,
        )
        .unwrap();
        assert!(report.passed, "{}", report.to_json());
        for v in &report.per_variable_ks {
            assert!(v.ks < 2.0 / n as f64, "{}: {}", v.variable, v.ks);
        }
        assert!(report.max_abs_spearman_deviation < 0.02);
    }

    #[test]
    fn wrong_target_fails_validation() {
        // Scenarios generated independently of a strongly-correlated
        // target must fail the rank check.
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let t = i as f64;
                vec![t, (t * 1.618).fract()]
            })
            .collect();
        let independent =
            SampleMatrix::from_values(60, 2, rows.iter().flat_map(|r| r.clone()).collect());
        // Comonotone fitting data gives a rho ~ 0.8+ target.
        let target_rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let t = i as f64;
                vec![t, t * 2.0 + (t * 0.37).sin() * 8.0]
            })
            .collect();
        let (bundle, _) = bundle_from_rows(target_rows);
        let report = validate_scenarios(
            &bundle,
            &bundle.variables,
            &independent,
            DEFAULT_KS_MAX,
            DEFAULT_RANK_MAX,
            None,
        )
        .unwrap();
        assert!(!report.passed);
        assert!(report.max_abs_spearman_deviation > 0.5);
    }

    #[test]
    fn column_mismatch_is_an_error() {
        let (bundle, _) =
            bundle_from_rows((0..10).map(|i| vec![i as f64, (i * i) as f64]).collect());
        let scenarios = SampleMatrix::from_values(3, 2, vec![0.0; 6]);
        let wrong = vec!["a".to_string(), "c".to_string()];
        assert!(validate_scenarios(&bundle, &wrong, &scenarios, 0.05, 0.05, None).is_err());
    }
}
