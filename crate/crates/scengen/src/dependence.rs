//! Rank-correlation estimation and the Gaussian-copula correlation scale.
//!
//! Spearman correlations are estimated with average ranks, converted to
//! the copula (product-moment) scale through σ = 2 sin(π ρ/6), and the
//! resulting matrix is repaired by eigenvalue clipping when sampling
//! noise makes it indefinite.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ingest::Dataset;

/// Minimum eigenvalue accepted without repair.
pub const PSD_TOLERANCE: f64 = -1e-8;

/// Floor that clipped eigenvalues are raised to during repair.
const EIGENVALUE_FLOOR: f64 = 1e-10;

/// Spearman rank correlations between variables, on the data scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RankCorrelationMatrix {
    names: Vec<String>,
    entries: DMatrix<f64>,
}

impl RankCorrelationMatrix {
    /// Build from raw entries, validating symmetry, the unit diagonal,
    /// and the [-1, 1] range.
    pub fn new(names: Vec<String>, entries: DMatrix<f64>) -> Result<Self> {
        validate_correlation_entries(&names, &entries)?;
        Ok(Self { names, entries })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }
}

/// Correlations on the Gaussian-copula scale, guaranteed PSD up to
/// [`PSD_TOLERANCE`]. `psd_repaired` records whether eigenvalue repair
/// was applied to reach that state.
#[derive(Debug, Clone, PartialEq)]
pub struct CopulaCorrelationMatrix {
    names: Vec<String>,
    entries: DMatrix<f64>,
    psd_repaired: bool,
}

impl CopulaCorrelationMatrix {
    pub fn new(names: Vec<String>, entries: DMatrix<f64>, psd_repaired: bool) -> Result<Self> {
        validate_correlation_entries(&names, &entries)?;
        let lambda = min_eigenvalue(&entries);
        if lambda < PSD_TOLERANCE {
            return Err(Error::Model(format!(
                "copula correlation matrix has minimum eigenvalue {lambda:.3e}; \
                 repair it with nearest_psd first"
            )));
        }
        Ok(Self {
            names,
            entries,
            psd_repaired,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn psd_repaired(&self) -> bool {
        self.psd_repaired
    }

    /// The rank-correlation matrix implied by this copula matrix.
    pub fn to_rank_matrix(&self) -> RankCorrelationMatrix {
        let n = self.n_vars();
        let mut entries = DMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    // Entries are in [-1, 1] by construction.
                    entries[(i, j)] = copula_sigma_to_rank(self.entries[(i, j)]).unwrap();
                }
            }
        }
        RankCorrelationMatrix {
            names: self.names.clone(),
            entries,
        }
    }
}

fn validate_correlation_entries(names: &[String], entries: &DMatrix<f64>) -> Result<()> {
    let n = names.len();
    if entries.nrows() != n || entries.ncols() != n {
        return Err(Error::Data(format!(
            "correlation matrix is {}x{} but there are {n} names",
            entries.nrows(),
            entries.ncols()
        )));
    }
    for i in 0..n {
        if (entries[(i, i)] - 1.0).abs() > 1e-12 {
            return Err(Error::Data(format!(
                "correlation matrix diagonal entry {i} is {}, expected 1",
                entries[(i, i)]
            )));
        }
        for j in 0..n {
            let v = entries[(i, j)];
            if !v.is_finite() || v.abs() > 1.0 + 1e-12 {
                return Err(Error::Data(format!(
                    "correlation entry ({i}, {j}) = {v} is outside [-1, 1]"
                )));
            }
            if (v - entries[(j, i)]).abs() > 1e-12 {
                return Err(Error::Data(format!(
                    "correlation matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Average ranks (1-based); tied values receive the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Spearman rank correlation: Pearson correlation of average-ranked data.
///
/// Requires equal lengths of at least 3 and non-constant inputs.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Data(format!(
            "spearman requires equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::Data(format!(
            "spearman requires at least 3 observations, got {}",
            x.len()
        )));
    }
    for (label, v) in [("first", x), ("second", y)] {
        if v.iter().any(|e| !e.is_finite()) {
            return Err(Error::Data(format!(
                "spearman {label} input contains a non-finite value"
            )));
        }
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    pearson(&rx, &ry)
        .ok_or_else(|| Error::Data("spearman is undefined for constant input".to_string()))
}

/// Pairwise Spearman correlations of all dataset variables.
pub fn spearman_matrix(d: &Dataset) -> Result<RankCorrelationMatrix> {
    let n_vars = d.n_vars();
    let n_obs = d.n_obs();
    if n_obs < 3 {
        return Err(Error::Data(format!(
            "rank correlation requires at least 3 observations, got {n_obs}"
        )));
    }
    if !d.is_clean() {
        return Err(Error::Data(
            "dataset contains missing values; clean it before correlation".into(),
        ));
    }
    let mut ranked: Vec<Vec<f64>> = Vec::with_capacity(n_vars);
    for (j, name) in d.variable_names().iter().enumerate() {
        let col = d.column(j);
        if col.iter().all(|&v| v == col[0]) {
            return Err(Error::Data(format!(
                "variable '{name}' is constant; its rank correlation is undefined"
            )));
        }
        ranked.push(average_ranks(&col));
    }
    let mut entries = DMatrix::identity(n_vars, n_vars);
    for i in 0..n_vars {
        for j in (i + 1)..n_vars {
            let r = pearson(&ranked[i], &ranked[j]).ok_or_else(|| {
                Error::Data(format!(
                    "rank correlation of '{}' and '{}' is undefined",
                    d.variable_names()[i],
                    d.variable_names()[j]
                ))
            })?;
            entries[(i, j)] = r;
            entries[(j, i)] = r;
        }
    }
    RankCorrelationMatrix::new(d.variable_names().to_vec(), entries)
}

/// Convert a rank correlation to the Gaussian-copula correlation:
/// σ = 2 sin(π ρ/6). Exact at -1, 0, and 1.
pub fn rank_to_copula_sigma(rho_r: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho_r) {
        return Err(Error::Domain(format!(
            "rank correlation must lie in [-1, 1], got {rho_r}"
        )));
    }
    // The fixed points are exact by identity; floating-point evaluation
    // of 2 sin(pi/6) lands one ulp short of 1.
    if rho_r == 0.0 || rho_r == 1.0 || rho_r == -1.0 {
        return Ok(rho_r);
    }
    Ok(2.0 * (std::f64::consts::PI * rho_r / 6.0).sin())
}

/// Inverse of [`rank_to_copula_sigma`]: ρ = (6/π) asin(σ/2).
pub fn copula_sigma_to_rank(sigma: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&sigma) {
        return Err(Error::Domain(format!(
            "copula correlation must lie in [-1, 1], got {sigma}"
        )));
    }
    if sigma == 0.0 || sigma == 1.0 || sigma == -1.0 {
        return Ok(sigma);
    }
    Ok(6.0 / std::f64::consts::PI * (sigma / 2.0).asin())
}

/// Minimum eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen();
    eig.eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Nearest positive-semidefinite correlation matrix by eigenvalue
/// clipping: negative eigenvalues are raised to a small floor, the matrix
/// is reconstructed, and the diagonal is rescaled back to 1. One pass,
/// then verified.
pub fn nearest_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Data("nearest_psd requires a square matrix".into()));
    }
    let symmetrized = (m + m.transpose()) * 0.5;
    let eig = symmetrized.symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Model(
            "eigen-decomposition failed during PSD repair".into(),
        ));
    }
    let clipped: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&v| v.max(EIGENVALUE_FLOOR))
        .collect();
    let mut rebuilt = DMatrix::zeros(n, n);
    for (k, &lambda) in clipped.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        rebuilt += lambda * v * v.transpose();
    }
    // Rescale to a unit diagonal and re-symmetrize the rounding noise.
    let scale: Vec<f64> = (0..n).map(|i| rebuilt[(i, i)].sqrt()).collect();
    let mut out = DMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (rebuilt[(i, j)] / (scale[i] * scale[j])).clamp(-1.0, 1.0);
            let w = (rebuilt[(j, i)] / (scale[i] * scale[j])).clamp(-1.0, 1.0);
            let avg = 0.5 * (v + w);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    let lambda = min_eigenvalue(&out);
    if lambda < PSD_TOLERANCE {
        return Err(Error::Model(format!(
            "PSD repair did not converge: minimum eigenvalue {lambda:.3e}"
        )));
    }
    Ok(out)
}

/// Convert a rank-correlation matrix to the copula scale, repairing the
/// result when the elementwise transform leaves it indefinite.
pub fn to_copula_matrix(r: &RankCorrelationMatrix) -> Result<CopulaCorrelationMatrix> {
    let n = r.n_vars();
    let mut entries = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                entries[(i, j)] = rank_to_copula_sigma(r.get(i, j))?;
            }
        }
    }
    let repaired = min_eigenvalue(&entries) < PSD_TOLERANCE;
    if repaired {
        entries = nearest_psd(&entries)?;
    }
    CopulaCorrelationMatrix::new(r.names().to_vec(), entries, repaired)
}
