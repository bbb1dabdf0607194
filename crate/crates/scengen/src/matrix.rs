//! Row-major matrix for sample and scenario storage.

use rayon::prelude::*;

/// A dense `n_rows x n_cols` matrix of `f64` stored row-major. Used for
/// uniform sample matrices and physical-scale scenario sets, where rows
/// are independent observations and columns are variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl SampleMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        }
    }

    /// Build from row-major values. Panics if the length does not match.
    pub fn from_values(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n_rows * n_cols, "shape mismatch");
        Self {
            n_rows,
            n_cols,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, col)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Fill every row in parallel. `fill` receives the row index and the
    /// row slice; because each row is written independently from its
    /// index alone, output is identical for any thread count.
    pub fn par_fill_rows<F>(&mut self, fill: F)
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        let n_cols = self.n_cols;
        self.values
            .par_chunks_mut(n_cols)
            .enumerate()
            .for_each(|(i, row)| fill(i, row));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_row_major() {
        let m = SampleMatrix::from_values(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(m.get(0, 2), 3.0);
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.row(1), &[4.0, 5.0, 6.0]);
        assert_eq!(m.column(1), vec![2.0, 5.0]);
    }

    #[test]
    fn parallel_fill_is_deterministic() {
        let fill = |i: usize, row: &mut [f64]| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (i * 31 + j) as f64;
            }
        };
        let mut a = SampleMatrix::zeros(500, 4);
        let mut b = SampleMatrix::zeros(500, 4);
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool8 = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap();
        pool1.install(|| a.par_fill_rows(fill));
        pool8.install(|| b.par_fill_rows(fill));
        assert_eq!(a, b);
    }
}
