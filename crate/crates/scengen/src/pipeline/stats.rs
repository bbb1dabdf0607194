//! Kolmogorov-Smirnov statistics and sample rank-correlation matrices.

use nalgebra::DMatrix;

use crate::dependence::spearman;
use crate::error::{Error, Result};
use crate::marginals::EmpiricalMarginal;
use crate::matrix::SampleMatrix;

fn sorted_copy(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::Data(format!(
            "KS statistic needs at least 2 values per sample, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("KS statistic requires finite values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(sorted)
}

/// Two-sample KS statistic: the supremum distance between the empirical
/// CDFs of `a` and `b`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let xa = sorted_copy(a)?;
    let xb = sorted_copy(b)?;
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let mut ia = 0usize;
    let mut ib = 0usize;
    let mut d: f64 = 0.0;
    while ia < xa.len() && ib < xb.len() {
        let x = xa[ia].min(xb[ib]);
        while ia < xa.len() && xa[ia] <= x {
            ia += 1;
        }
        while ib < xb.len() && xb[ib] <= x {
            ib += 1;
        }
        d = d.max((ia as f64 / na - ib as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample KS statistic of `a` against a continuous CDF.
pub fn ks_vs_cdf<F: Fn(f64) -> f64>(a: &[f64], cdf: F) -> Result<f64> {
    let xs = sorted_copy(a)?;
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    Ok(d)
}

/// One-sample KS statistic against a fitted marginal's interpolated CDF.
pub fn ks_vs_marginal(a: &[f64], marginal: &EmpiricalMarginal) -> Result<f64> {
    ks_vs_cdf(a, |x| marginal.cdf(x))
}

/// Pairwise Spearman matrix of the columns of a sample matrix.
pub fn sample_spearman_matrix(m: &SampleMatrix) -> Result<DMatrix<f64>> {
    let n = m.n_cols();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| m.column(j)).collect();
    let mut out = DMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let r = spearman(&cols[i], &cols[j])?;
            out[(i, j)] = r;
            out[(j, i)] = r;
        }
    }
    Ok(out)
}
