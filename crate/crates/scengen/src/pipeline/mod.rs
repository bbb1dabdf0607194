//! End-to-end workflows: fit a model from CSV, generate scenario sets,
//! validate scenarios, and export marginal CDF curves.

pub mod bundle;
pub mod config;
pub mod power;
pub mod scenario;
pub mod stats;
pub mod validate;

use std::fmt::Write as _;
use std::path::Path;

use crate::dependence::{spearman_matrix, to_copula_matrix};
use crate::error::{Error, Result};
use crate::gaussian::{joint_normal_transform, GaussianCopulaModel};
use crate::ingest::{align_and_clean, load_timeseries_csv, CsvSchema};
use crate::matrix::SampleMatrix;
use crate::rng::SeededRng;
use crate::util::format_f64;
use crate::vine::{dvine_from_rank_matrix, sample_dvine};

pub use bundle::{DependenceModel, FitMetadata, ModelBundle};
pub use config::{FitConfig, ModelKind};
pub use power::{wind_power_curve, PowerCurve};
pub use scenario::{read_scenario_csv, Provenance, ScenarioSet};
pub use stats::{ks_two_sample, ks_vs_cdf, ks_vs_marginal, sample_spearman_matrix};
pub use validate::{validate_scenarios, ValidationReport, DEFAULT_KS_MAX, DEFAULT_RANK_MAX};

/// Outcome summary of a fit.
#[derive(Debug, Clone)]
pub struct FitSummary {
    pub variables: Vec<String>,
    pub n_obs: usize,
    pub dropped_rows: usize,
    pub kind: ModelKind,
    pub psd_repaired: bool,
}

/// Fit a model per the configuration and write the bundle to `out_path`.
pub fn cmd_fit(config: &FitConfig, out_path: &Path) -> Result<FitSummary> {
    config.validate()?;
    let loaded = load_timeseries_csv(&config.input, &CsvSchema::Infer)?;
    let selected = match &config.variables {
        Some(names) => loaded.select(names)?,
        None => loaded,
    };
    let cleaned = align_and_clean(&selected, config.missing_policy)?;
    let data = &cleaned.dataset;

    let marginals = data
        .variable_names()
        .iter()
        .enumerate()
        .map(|(j, name)| crate::marginals::EmpiricalMarginal::fit(name.clone(), &data.column(j)))
        .collect::<Result<Vec<_>>>()?;

    let rank = spearman_matrix(data)?;
    let dependence = match config.model {
        ModelKind::Jnt => DependenceModel::Jnt(to_copula_matrix(&rank)?),
        ModelKind::Dvine => {
            let order_names = config.order.as_ref().expect("validated");
            if order_names.len() != data.n_vars() {
                return Err(Error::Config(format!(
                    "d-vine order lists {} variables, the dataset has {}",
                    order_names.len(),
                    data.n_vars()
                )));
            }
            let order: Vec<usize> = order_names
                .iter()
                .map(|name| {
                    data.variable_names()
                        .iter()
                        .position(|v| v == name)
                        .ok_or_else(|| {
                            Error::Config(format!("d-vine order names unknown variable '{name}'"))
                        })
                })
                .collect::<Result<_>>()?;
            DependenceModel::Dvine(dvine_from_rank_matrix(&rank, &order)?)
        }
    };

    for name in config.power_curves.keys() {
        if !data.variable_names().contains(name) {
            return Err(Error::Config(format!(
                "power curve references unknown variable '{name}'"
            )));
        }
    }

    let bundle = ModelBundle {
        variables: data.variable_names().to_vec(),
        marginals,
        dependence,
        power_curves: config.power_curves.clone(),
        metadata: FitMetadata {
            source: config.input.display().to_string(),
            n_obs: data.n_obs(),
            dropped_rows: cleaned.dropped_rows,
            created_at_unix: bundle::now_unix(),
        },
    };
    bundle.save(out_path)?;

    Ok(FitSummary {
        variables: bundle.variables.clone(),
        n_obs: bundle.metadata.n_obs,
        dropped_rows: bundle.metadata.dropped_rows,
        kind: config.model,
        psd_repaired: bundle.dependence.psd_repaired(),
    })
}

/// Draw the copula-scale uniforms for `count` scenarios of a bundle.
pub fn sample_uniforms(
    bundle: &ModelBundle,
    count: usize,
    rng: &SeededRng,
) -> Result<SampleMatrix> {
    match &bundle.dependence {
        DependenceModel::Jnt(copula) => {
            let model = GaussianCopulaModel::new(copula.clone())?;
            joint_normal_transform(&model, count, rng)
        }
        DependenceModel::Dvine(spec) => sample_dvine(spec, count, rng),
    }
}

/// Generate a scenario set: uniforms from the dependence model mapped
/// through each variable's marginal quantile.
pub fn generate_scenarios(
    bundle: &ModelBundle,
    count: usize,
    master_seed: u64,
    model_ref: &str,
) -> Result<ScenarioSet> {
    let rng = SeededRng::new(master_seed, 0);
    let mut uniforms = sample_uniforms(bundle, count, &rng)?;
    // Quantile arguments are open-interval uniforms, so the unwrap below
    // cannot fire.
    let marginals = &bundle.marginals;
    uniforms.par_fill_rows(|_, row| {
        for (j, value) in row.iter_mut().enumerate() {
            *value = marginals[j].quantile(*value).unwrap();
        }
    });
    Ok(ScenarioSet {
        variables: bundle.variables.clone(),
        values: uniforms,
        provenance: Provenance {
            master_seed,
            model_ref: model_ref.to_string(),
            generated_at_unix: bundle::now_unix(),
        },
    })
}

/// Apply the bundle's power curves to a scenario set: columns with a
/// curve are mapped speed -> power, others pass through. Negative
/// speeds (possible when a marginal was fitted on signed data) clamp
/// to zero output.
pub fn apply_power_curves(bundle: &ModelBundle, set: &ScenarioSet) -> Result<ScenarioSet> {
    if bundle.power_curves.is_empty() {
        return Err(Error::Config(
            "the model bundle defines no power curves".into(),
        ));
    }
    let curves: Vec<Option<&PowerCurve>> = bundle
        .variables
        .iter()
        .map(|name| bundle.power_curves.get(name))
        .collect();
    for curve in curves.iter().flatten() {
        curve.validate()?;
    }
    let mut values = set.values.clone();
    values.par_fill_rows(|_, row| {
        for (value, curve) in row.iter_mut().zip(&curves) {
            if let Some(curve) = curve {
                *value = wind_power_curve(value.max(0.0), curve).expect("curve validated");
            }
        }
    });
    Ok(ScenarioSet {
        variables: set.variables.clone(),
        values,
        provenance: set.provenance.clone(),
    })
}

/// Outcome summary of `sample`.
#[derive(Debug, Clone)]
pub struct SampleSummary {
    pub count: usize,
    pub n_vars: usize,
    pub master_seed: u64,
}

/// Load a bundle, sample scenarios, and write them as CSV. With
/// `threads`, sampling runs on a dedicated pool of that size; output is
/// identical regardless. `power_out` additionally writes a power-curve
/// transformed copy.
pub fn cmd_sample(
    model_path: &Path,
    count: usize,
    master_seed: u64,
    out_path: &Path,
    threads: Option<usize>,
    power_out: Option<&Path>,
) -> Result<SampleSummary> {
    if count == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let bundle = ModelBundle::load(model_path)?;
    let model_ref = model_path.display().to_string();
    let set = match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("cannot build a {t}-thread pool: {e}")))?;
            pool.install(|| generate_scenarios(&bundle, count, master_seed, &model_ref))?
        }
        None => generate_scenarios(&bundle, count, master_seed, &model_ref)?,
    };
    set.write_csv(out_path)?;
    if let Some(path) = power_out {
        let powered = apply_power_curves(&bundle, &set)?;
        powered.write_csv(path)?;
    }
    Ok(SampleSummary {
        count,
        n_vars: bundle.n_vars(),
        master_seed,
    })
}

/// Load a bundle and a scenario CSV and validate the scenarios.
pub fn cmd_validate(
    model_path: &Path,
    scenarios_path: &Path,
    ks_max: f64,
    rank_max: f64,
) -> Result<ValidationReport> {
    let bundle = ModelBundle::load(model_path)?;
    let (names, scenarios) = read_scenario_csv(scenarios_path)?;
    validate_scenarios(&bundle, &names, &scenarios, ks_max, rank_max, None)
}

/// Number of points exported by [`cmd_plot_data`].
pub const PLOT_POINTS: usize = 512;

/// Export (x, CDF(x)) pairs of one variable's fitted marginal, evenly
/// spaced across its sample range.
pub fn cmd_plot_data(model_path: &Path, variable: &str, out_path: &Path) -> Result<()> {
    let bundle = ModelBundle::load(model_path)?;
    let marginal = bundle.marginal(variable)?;
    let (lo, hi) = (marginal.min(), marginal.max());
    let mut out = String::from("x,cdf\n");
    for k in 0..PLOT_POINTS {
        let x = lo + (hi - lo) * k as f64 / (PLOT_POINTS - 1) as f64;
        let _ = writeln!(out, "{},{}", format_f64(x), format_f64(marginal.cdf(x)));
    }
    crate::util::write_atomic(out_path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use std::collections::BTreeMap;

    /// Synthetic two-variable CSV with a monotone link plus noise.
    fn write_synthetic_csv(path: &Path, n: usize) {
        let rng = SeededRng::new(555, 0);
        let mut text = String::from("load,wind\n");
        for i in 0..n {
            let z1 = crate::normal::std_normal_quantile_inner(rng.uniform_at(2 * i as u64));
            let z2 = crate::normal::std_normal_quantile_inner(rng.uniform_at(2 * i as u64 + 1));
            let load = 100.0 + 15.0 * z1;
            let wind = (0.8 * z1 + 0.6 * z2).exp() * 8.0;
            let _ = writeln!(text, "{load},{wind}");
        }
        std::fs::write(path, text).unwrap();
    }

    fn fit_config(input: &Path, kind: ModelKind, order: Option<Vec<String>>) -> FitConfig {
        FitConfig {
            input: input.to_path_buf(),
            variables: None,
            model: kind,
            order,
            missing_policy: crate::ingest::MissingPolicy::DropRow,
            power_curves: BTreeMap::new(),
        }
    }

    #[test]
    fn fit_then_sample_is_deterministic_and_in_range() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("data.csv");
        write_synthetic_csv(&csv, 400);
        let model = dir.path().join("model.json");
        let summary = cmd_fit(&fit_config(&csv, ModelKind::Jnt, None), &model).unwrap();
        assert_eq!(
            summary.variables,
            vec!["load".to_string(), "wind".to_string()]
        );
        assert!(!summary.psd_repaired);

        let single = dir.path().join("one.csv");
        cmd_sample(&model, 1, 9, &single, None, None).unwrap();
        let (_, one_row) = read_scenario_csv(&single).unwrap();
        assert_eq!(one_row.n_rows(), 1);

        let out1 = dir.path().join("s1.csv");
        let out2 = dir.path().join("s2.csv");
        cmd_sample(&model, 50, 42, &out1, None, None).unwrap();
        cmd_sample(&model, 50, 42, &out2, Some(3), None).unwrap();
        assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());

        let bundle = ModelBundle::load(&model).unwrap();
        let (_, scenarios) = read_scenario_csv(&out1).unwrap();
        for j in 0..2 {
            let m = &bundle.marginals[j];
            for i in 0..scenarios.n_rows() {
                let v = scenarios.get(i, j);
                assert!(v >= m.min() && v <= m.max());
            }
        }
    }

    #[test]
    fn fit_save_load_sample_matches_in_memory_path() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("data.csv");
        write_synthetic_csv(&csv, 300);
        let model = dir.path().join("model.json");
        cmd_fit(&fit_config(&csv, ModelKind::Jnt, None), &model).unwrap();

        let loaded = ModelBundle::load(&model).unwrap();
        let direct = generate_scenarios(&loaded, 200, 7, "m").unwrap();
        let reloaded = ModelBundle::from_json(&loaded.to_json().unwrap()).unwrap();
        let indirect = generate_scenarios(&reloaded, 200, 7, "m").unwrap();
        assert_eq!(direct.values, indirect.values);
    }

    #[test]
    fn dvine_fit_works_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("data.csv");
        write_synthetic_csv(&csv, 400);
        let model = dir.path().join("model.json");
        let order = Some(vec!["wind".to_string(), "load".to_string()]);
        let summary = cmd_fit(&fit_config(&csv, ModelKind::Dvine, order), &model).unwrap();
        assert_eq!(summary.kind, ModelKind::Dvine);
        let out = dir.path().join("s.csv");
        cmd_sample(&model, 100, 1, &out, None, None).unwrap();
        let report = cmd_validate(&model, &out, DEFAULT_KS_MAX, DEFAULT_RANK_MAX);
        assert!(report.is_ok());
    }

    #[test]
    fn self_sampled_scenarios_validate() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("data.csv");
        write_synthetic_csv(&csv, 2000);
        let model = dir.path().join("model.json");
        cmd_fit(&fit_config(&csv, ModelKind::Jnt, None), &model).unwrap();
        let out = dir.path().join("s.csv");
        cmd_sample(&model, 20_000, 11, &out, None, None).unwrap();
        let report = cmd_validate(&model, &out, DEFAULT_KS_MAX, DEFAULT_RANK_MAX).unwrap();
        assert!(report.passed, "{}", report.to_json());
    }

    #[test]
    fn constant_column_fails_fit_with_its_name() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("data.csv");
        std::fs::write(&csv, "a,flat\n1.0,5.0\n2.0,5.0\n3.0,5.0\n").unwrap();
        let err = cmd_fit(
            &fit_config(&csv, ModelKind::Jnt, None),
            &dir.path().join("m.json"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("flat"));
    }

    #[test]
    fn power_curves_transform_a_sampled_copy() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("data.csv");
        write_synthetic_csv(&csv, 300);
        let model = dir.path().join("model.json");
        let mut config = fit_config(&csv, ModelKind::Jnt, None);
        config.power_curves.insert(
            "wind".into(),
            PowerCurve {
                cut_in: 3.0,
                rated_speed: 12.0,
                cut_out: 25.0,
                rated_power: 2.0,
            },
        );
        cmd_fit(&config, &model).unwrap();
        let out = dir.path().join("s.csv");
        let power = dir.path().join("p.csv");
        cmd_sample(&model, 100, 3, &out, None, Some(&power)).unwrap();
        let (_, powered) = read_scenario_csv(&power).unwrap();
        let (_, raw) = read_scenario_csv(&out).unwrap();
        for i in 0..100 {
            assert_eq!(powered.get(i, 0), raw.get(i, 0)); // load untouched
            let p = powered.get(i, 1);
            assert!((0.0..=2.0).contains(&p), "power {p}");
        }
    }

    #[test]
    fn plot_data_is_monotone_and_spans_the_range() {
        use crate::dependence::CopulaCorrelationMatrix;
        use nalgebra::DMatrix;

        // A two-point marginal, built directly: the exported curve is the
        // straight line between its plotting positions.
        let bundle = ModelBundle {
            variables: vec!["x".into()],
            marginals: vec![crate::marginals::EmpiricalMarginal::fit("x", &[0.0, 1.0]).unwrap()],
            dependence: DependenceModel::Jnt(
                CopulaCorrelationMatrix::new(vec!["x".into()], DMatrix::identity(1, 1), false)
                    .unwrap(),
            ),
            power_curves: BTreeMap::new(),
            metadata: FitMetadata {
                source: "mem".into(),
                n_obs: 2,
                dropped_rows: 0,
                created_at_unix: 0,
            },
        };
        let dir = tempfile::tempdir().unwrap();
        let model = dir.path().join("model.json");
        bundle.save(&model).unwrap();
        let out = dir.path().join("curve.csv");
        cmd_plot_data(&model, "x", &out).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        let rows: Vec<(f64, f64)> = text
            .lines()
            .skip(1)
            .map(|l| {
                let mut it = l.split(',');
                (
                    it.next().unwrap().parse().unwrap(),
                    it.next().unwrap().parse().unwrap(),
                )
            })
            .collect();
        assert_eq!(rows.len(), PLOT_POINTS);
        assert_eq!(rows[0], (0.0, 0.25));
        assert_eq!(rows[PLOT_POINTS - 1], (1.0, 0.75));
        for w in rows.windows(2) {
            assert!(w[1].1 >= w[0].1);
        }
        assert!(cmd_plot_data(&model, "nope", &out).is_err());
    }
}
