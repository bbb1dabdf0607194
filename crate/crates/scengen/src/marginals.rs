//! One-dimensional empirical marginal distributions.
//!
//! A fitted marginal stores the sorted sample and exposes the
//! piecewise-linear empirical CDF, its inverse (quantile), and the
//! probability integral transform. Plotting positions follow the
//! (i - 0.5)/n convention and the quantile clamps outside the observed
//! sample range, so generated values never leave the observed support.

use crate::error::{Error, Result};

/// A one-dimensional empirical distribution backed by sorted samples.
///
/// Immutable after fitting; all operations are read-only.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMarginal {
    name: String,
    sorted_values: Vec<f64>,
}

impl EmpiricalMarginal {
    /// Fit a marginal from raw samples. Requires at least two finite
    /// samples; ties are legal.
    pub fn fit(name: impl Into<String>, samples: &[f64]) -> Result<Self> {
        let name = name.into();
        if samples.len() < 2 {
            return Err(Error::Data(format!(
                "marginal '{name}' needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "marginal '{name}' has a non-finite sample: {bad}"
            )));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self {
            name,
            sorted_values: sorted,
        })
    }

    /// Rebuild a marginal from already-sorted values (bundle loading).
    pub fn from_sorted_values(name: impl Into<String>, sorted_values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if sorted_values.len() < 2 {
            return Err(Error::Data(format!(
                "marginal '{name}' needs at least 2 samples, got {}",
                sorted_values.len()
            )));
        }
        if sorted_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "marginal '{name}' has a non-finite stored value"
            )));
        }
        if sorted_values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Data(format!(
                "marginal '{name}' stored values are not sorted"
            )));
        }
        Ok(Self {
            name,
            sorted_values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted_values
    }

    pub fn min(&self) -> f64 {
        self.sorted_values[0]
    }

    pub fn max(&self) -> f64 {
        *self.sorted_values.last().unwrap()
    }

    /// Plotting position of the i-th sorted sample: (i + 0.5) / n.
    #[inline]
    pub fn plotting_position(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n() as f64
    }

    pub fn plotting_positions(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.plotting_position(i)).collect()
    }

    /// Empirical CDF via piecewise-linear interpolation through the
    /// (value, plotting position) knots.
    ///
    /// A value equal to a sample maps to the mean plotting position of
    /// its tied block; strictly below the minimum maps to 0 and strictly
    /// above the maximum to 1.
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        let vals = &self.sorted_values;
        let n = vals.len();
        let lo = vals.partition_point(|v| *v < x);
        let hi = vals.partition_point(|v| *v <= x);
        if lo < hi {
            // Exact tie with the block [lo, hi); positions are linear in
            // the index so the block mean is the mean of the endpoints.
            return 0.5 * (self.plotting_position(lo) + self.plotting_position(hi - 1));
        }
        if lo == 0 {
            return 0.0;
        }
        if lo == n {
            return 1.0;
        }
        let (x0, x1) = (vals[lo - 1], vals[lo]);
        let (u0, u1) = (self.plotting_position(lo - 1), self.plotting_position(lo));
        u0 + (u1 - u0) * (x - x0) / (x1 - x0)
    }

    /// Inverse of the interpolated CDF. Clamps to the sample minimum for
    /// u at or below the first plotting position and to the maximum at or
    /// above the last.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!(
                "quantile of '{}' requires u in [0, 1], got {u}",
                self.name
            )));
        }
        let vals = &self.sorted_values;
        let n = vals.len();
        if u <= self.plotting_position(0) {
            return Ok(vals[0]);
        }
        if u >= self.plotting_position(n - 1) {
            return Ok(vals[n - 1]);
        }
        // Segment index from the closed-form inverse of (i + 0.5)/n,
        // nudged to be robust against floating-point rounding.
        let mut i = ((u * n as f64) - 0.5).floor() as usize;
        i = i.min(n - 2);
        while i > 0 && u < self.plotting_position(i) {
            i -= 1;
        }
        while i + 2 < n && u >= self.plotting_position(i + 1) {
            i += 1;
        }
        let (u0, u1) = (self.plotting_position(i), self.plotting_position(i + 1));
        let (x0, x1) = (vals[i], vals[i + 1]);
        Ok(x0 + (x1 - x0) * (u - u0) / (u1 - u0))
    }

    /// Probability integral transform: elementwise CDF.
    pub fn pit(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "pit through '{}' requires finite samples, got {bad}",
                self.name
            )));
        }
        Ok(samples.iter().map(|&x| self.cdf(x)).collect())
    }
}
