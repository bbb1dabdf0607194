//! Gaussian-copula machinery: Cholesky factorization, the bivariate
//! conditional copula (h-function and inverse), bivariate rank-correlated
//! sampling, and the n-dimensional joint normal transform.
//!
//! Samplers draw from counter-based streams, one draw index per
//! (row, column) cell, so results are bit-identical for a fixed master
//! seed regardless of how rows are distributed over threads.

use nalgebra::DMatrix;

use crate::dependence::{rank_to_copula_sigma, CopulaCorrelationMatrix};
use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;
use crate::normal::{std_normal_cdf, std_normal_quantile_inner};
use crate::rng::{SeededRng, UNIT_OPEN_MAX, UNIT_OPEN_MIN};

/// Correlation magnitude used in place of |ρ| = 1 inside the h-functions.
const RHO_CLAMP: f64 = 1.0 - 1e-12;

/// Cholesky pivot threshold below which a matrix is reported non-PSD.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Lower-triangular Cholesky factor of a symmetric PSD matrix.
///
/// Fails with a repair hint when a pivot drops to [`PIVOT_TOLERANCE`]
/// or below.
pub fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Data("cholesky requires a square matrix".into()));
    }
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = m[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if diag <= PIVOT_TOLERANCE {
            return Err(Error::Model(format!(
                "matrix is not positive definite (pivot {diag:.3e} at column {j}); \
                 apply PSD repair before factorizing"
            )));
        }
        l[(j, j)] = diag.sqrt();
        for i in (j + 1)..n {
            let mut sum = m[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = sum / l[(j, j)];
        }
    }
    Ok(l)
}

#[inline]
fn clamp_rho(rho: f64) -> f64 {
    rho.clamp(-RHO_CLAMP, RHO_CLAMP)
}

/// h-function without argument validation. ρ = 0 is an exact identity in
/// the first argument; |ρ| = 1 degenerates to a comonotone (resp.
/// countermonotone) step kept strictly inside (0, 1).
#[inline]
pub(crate) fn h_gauss_inner(u: f64, v: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        return u;
    }
    if rho == 1.0 {
        return if u >= v { UNIT_OPEN_MAX } else { UNIT_OPEN_MIN };
    }
    if rho == -1.0 {
        return if u >= 1.0 - v {
            UNIT_OPEN_MAX
        } else {
            UNIT_OPEN_MIN
        };
    }
    let r = clamp_rho(rho);
    let z =
        (std_normal_quantile_inner(u) - r * std_normal_quantile_inner(v)) / (1.0 - r * r).sqrt();
    std_normal_cdf(z).clamp(UNIT_OPEN_MIN, UNIT_OPEN_MAX)
}

/// Inverse h-function without argument validation. ρ = 0 is an exact
/// identity; |ρ| = 1 short-circuits to the comonotone/countermonotone
/// copy of the conditioning value.
#[inline]
pub(crate) fn h_gauss_inv_inner(p: f64, v: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        return p;
    }
    if rho == 1.0 {
        return v;
    }
    if rho == -1.0 {
        return 1.0 - v;
    }
    let r = clamp_rho(rho);
    let z = (1.0 - r * r).sqrt() * std_normal_quantile_inner(p) + r * std_normal_quantile_inner(v);
    std_normal_cdf(z).clamp(UNIT_OPEN_MIN, UNIT_OPEN_MAX)
}

fn check_open_unit(label: &str, value: f64) -> Result<()> {
    if !(value > 0.0 && value < 1.0) {
        return Err(Error::Domain(format!(
            "{label} must lie strictly inside (0, 1), got {value}"
        )));
    }
    Ok(())
}

fn check_rho(rho: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!(
            "correlation must lie in [-1, 1], got {rho}"
        )));
    }
    Ok(())
}

/// Conditional CDF of the Gaussian copula:
/// h(u | v) = Φ((Φ⁻¹(u) - ρ Φ⁻¹(v)) / sqrt(1 - ρ²)).
///
/// ρ is taken on the copula (σ) scale and is clamped away from ±1.
pub fn h_gauss(u: f64, v: f64, rho: f64) -> Result<f64> {
    check_open_unit("u", u)?;
    check_open_unit("v", v)?;
    check_rho(rho)?;
    Ok(h_gauss_inner(u, v, clamp_rho(rho)))
}

/// Inverse of [`h_gauss`] in its first argument:
/// h⁻¹(p | v) = Φ(sqrt(1 - ρ²) Φ⁻¹(p) + ρ Φ⁻¹(v)).
pub fn h_gauss_inv(p: f64, v: f64, rho: f64) -> Result<f64> {
    check_open_unit("p", p)?;
    check_open_unit("v", v)?;
    check_rho(rho)?;
    Ok(h_gauss_inv_inner(p, v, clamp_rho(rho)))
}

/// Sample `count` pairs of uniforms with the given Spearman rank
/// correlation through the bivariate Gaussian copula: the first column is
/// the raw driver draw, the second the inverse conditional CDF of an
/// independent draw. |ρ_r| = 1 short-circuits to an exact comonotone or
/// countermonotone copy.
pub fn sample_bivariate_copula(rho_r: f64, count: usize, rng: &SeededRng) -> Result<SampleMatrix> {
    check_rho(rho_r)?;
    if count == 0 {
        return Err(Error::Data("sample count must be positive".into()));
    }
    let sigma = rank_to_copula_sigma(rho_r)?;
    let mut out = SampleMatrix::zeros(count, 2);
    out.par_fill_rows(|i, row| {
        let u1 = rng.uniform_at(2 * i as u64);
        let u2 = rng.uniform_at(2 * i as u64 + 1);
        row[0] = u1;
        row[1] = h_gauss_inv_inner(u2, u1, sigma);
    });
    Ok(out)
}

/// A Gaussian copula ready for sampling: the correlation matrix together
/// with its lower-triangular Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCopulaModel {
    copula: CopulaCorrelationMatrix,
    cholesky_factor: DMatrix<f64>,
}

impl GaussianCopulaModel {
    pub fn new(copula: CopulaCorrelationMatrix) -> Result<Self> {
        let cholesky_factor = cholesky(copula.entries())?;
        Ok(Self {
            copula,
            cholesky_factor,
        })
    }

    pub fn copula(&self) -> &CopulaCorrelationMatrix {
        &self.copula
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.cholesky_factor
    }

    pub fn n_vars(&self) -> usize {
        self.copula.n_vars()
    }
}

/// The n-dimensional joint normal transform: draw independent standard
/// normals via Φ⁻¹ of counter-based uniforms, correlate them with the
/// Cholesky factor, and map each coordinate back to a uniform with Φ.
pub fn joint_normal_transform(
    model: &GaussianCopulaModel,
    count: usize,
    rng: &SeededRng,
) -> Result<SampleMatrix> {
    if count == 0 {
        return Err(Error::Data("sample count must be positive".into()));
    }
    let n = model.n_vars();
    let l = &model.cholesky_factor;
    let mut out = SampleMatrix::zeros(count, n);
    out.par_fill_rows(|i, row| {
        let base = (i * n) as u64;
        let z: Vec<f64> = (0..n)
            .map(|j| std_normal_quantile_inner(rng.uniform_at(base + j as u64)))
            .collect();
        for j in 0..n {
            let mut y = 0.0;
            for (k, zk) in z.iter().enumerate().take(j + 1) {
                y += l[(j, k)] * zk;
            }
            row[j] = std_normal_cdf(y).clamp(UNIT_OPEN_MIN, UNIT_OPEN_MAX);
        }
    });
    Ok(out)
}
