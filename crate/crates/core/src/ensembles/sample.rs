use faer::Mat;

use crate::error::{EslError, Result};

#[inline]
pub(crate) fn packed_index(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

/// One realized real symmetric matrix. Only the lower triangle is stored
/// (row-major), so `M = M^T` holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrixSample {
    n: usize,
    lower: Vec<f64>,
    seed: u64,
    digest: [u8; 32],
}

impl SymmetricMatrixSample {
    pub fn from_lower(n: usize, lower: Vec<f64>, seed: u64, digest: [u8; 32]) -> Result<Self> {
        if lower.len() != n * (n + 1) / 2 {
            return Err(EslError::InvalidParameter(format!(
                "lower triangle of a {n}x{n} matrix needs {} entries, got {}",
                n * (n + 1) / 2,
                lower.len()
            )));
        }
        Ok(SymmetricMatrixSample { n, lower, seed, digest })
    }

    /// Builds a sample from the lower triangle of `entry(i, j)`, `j <= i`.
    pub fn from_fn(n: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                lower.push(entry(i, j));
            }
        }
        SymmetricMatrixSample { n, lower, seed: 0, digest: [0; 32] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn digest(&self) -> &[u8; 32] {
        &self.digest
    }

    /// Lower triangle, row-major: row `i` holds entries `(i, 0..=i)`.
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.lower[packed_index(i, j)]
        } else {
            self.lower[packed_index(j, i)]
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.lower[packed_index(i, i)]).sum()
    }

    /// Squared Hilbert-Schmidt norm.
    pub fn frobenius_sq(&self) -> f64 {
        let mut diag = 0.0;
        let mut off = 0.0;
        for i in 0..self.n {
            let row = &self.lower[packed_index(i, 0)..=packed_index(i, i)];
            off += row[..i].iter().map(|x| x * x).sum::<f64>();
            diag += row[i] * row[i];
        }
        diag + 2.0 * off
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.lower[packed_index(i, 0)..=packed_index(i, i)];
            let mut acc = 0.0;
            for (j, &a) in row[..i].iter().enumerate() {
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc + row[i] * x[i];
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.lower.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn check_finite(&self) -> Result<()> {
        if let Some(pos) = self.lower.iter().position(|x| !x.is_finite()) {
            let row = ((((8 * pos + 1) as f64).sqrt() - 1.0) / 2.0).floor() as usize;
            let row = if packed_index(row + 1, 0) <= pos { row + 1 } else { row };
            return Err(EslError::NonFinite { row, col: pos - packed_index(row, 0) });
        }
        Ok(())
    }

    /// Dense copy with both triangles filled.
    pub fn to_dense(&self) -> Mat<f64> {
        let n = self.n;
        let mut m = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            let row = &self.lower[packed_index(i, 0)..=packed_index(i, i)];
            for (j, &a) in row.iter().enumerate() {
                m[(i, j)] = a;
                m[(j, i)] = a;
            }
        }
        m
    }
}
