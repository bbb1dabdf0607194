//! Scenario generation for correlated power-system uncertainty.
//!
//! Models multivariate stochastic dependence among exogenous variables
//! (system load, wind, solar) in two pieces: one-dimensional empirical
//! marginal distributions, and a dependence structure sampled either
//! through an n-dimensional Gaussian copula (the joint normal transform)
//! or a d-vine pair-copula construction. Generated uniforms map back to
//! physical values through the inverse marginal CDFs.
//!
//! The `scengen` binary drives the full workflow:
//!
//! ```text
//! scengen fit --config fit.json --out model.json
//! scengen sample --model model.json --count 100000 --seed 42 --out scenarios.csv
//! scengen validate --model model.json --scenarios scenarios.csv
//! scengen plot-data --model model.json --var load --out cdf.csv
//! ```

pub mod dependence;
pub mod error;
pub mod gaussian;
pub mod ingest;
pub mod marginals;
pub mod matrix;
pub mod normal;
pub mod pipeline;
pub mod rng;
pub mod util;
pub mod vine;

pub use dependence::{
    copula_sigma_to_rank, nearest_psd, rank_to_copula_sigma, spearman, spearman_matrix,
    to_copula_matrix, CopulaCorrelationMatrix, RankCorrelationMatrix,
};
pub use error::{Error, Result};
pub use gaussian::{
    cholesky, h_gauss, h_gauss_inv, joint_normal_transform, sample_bivariate_copula,
    GaussianCopulaModel,
};
pub use ingest::{align_and_clean, load_timeseries_csv, CsvSchema, Dataset, MissingPolicy};
pub use marginals::EmpiricalMarginal;
pub use matrix::SampleMatrix;
pub use normal::{std_normal_cdf, std_normal_quantile};
pub use pipeline::{ModelBundle, ScenarioSet, ValidationReport};
pub use rng::SeededRng;
pub use vine::{
    build_dvine, dvine_from_rank_matrix, implied_copula_matrix, sample_dvine,
    validate_regular_vine, DVineSpec, VineEdge, VineStructure,
};
