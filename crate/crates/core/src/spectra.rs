//! Eigenvalues of symmetric samples, their empirical spectral distribution
//! and empirical Stieltjes transform.

use std::io::{BufRead, Write};

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::Par;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensembles::SymmetricMatrixSample;
use crate::error::{EslError, Result};

/// Default number of histogram bins.
pub const DEFAULT_BINS: usize = 100;
/// Relative padding of the default histogram range on either side.
pub const DEFAULT_PAD: f64 = 0.05;

/// Eigenvalues in nondecreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigList(Vec<f64>);

impl EigList {
    /// Sorts the values. Non-finite values are rejected.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EslError::InvalidParameter(format!("eigenvalue {i} is not finite")));
        }
        values.sort_by(f64::total_cmp);
        Ok(EigList(values))
    }

    /// Merges several spectra into one pooled list.
    pub fn pooled<'a>(lists: impl IntoIterator<Item = &'a EigList>) -> EigList {
        let mut all: Vec<f64> = lists.into_iter().flat_map(|l| l.0.iter().copied()).collect();
        all.sort_by(f64::total_cmp);
        EigList(all)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> Option<f64> {
        self.0.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.0.last().copied()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn sum_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// One value per line with 17 significant digits.
    pub fn write_txt<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.0 {
            writeln!(w, "{v:.16e}")?;
        }
        Ok(())
    }

    /// Reads one value per line; blank lines and `#` comments are skipped.
    pub fn read_txt<R: BufRead>(r: R) -> Result<Self> {
        let mut values = Vec::new();
        for line in r.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            values.push(t.parse::<f64>().map_err(|e| EslError::Parse { input: t.to_string(), reason: e.to_string() })?);
        }
        EigList::new(values)
    }
}

/// All eigenvalues of a symmetric sample, computed by a sequential dense
/// solver so that results are bit-reproducible.
pub fn eigenvalues_symmetric(m: &SymmetricMatrixSample) -> Result<EigList> {
    m.check_finite()?;
    let n = m.n();
    if n == 0 {
        return Ok(EigList(Vec::new()));
    }
    let a = m.to_dense();
    let mut s = Diag::<f64>::zeros(n);
    let scratch = evd::self_adjoint_evd_scratch::<f64>(n, ComputeEigenvectors::No, Par::Seq, Default::default());
    let mut buf = MemBuffer::new(scratch);
    evd::self_adjoint_evd(a.as_ref(), s.as_mut(), None, Par::Seq, MemStack::new(&mut buf), Default::default())
        .map_err(|_| EslError::EigenSolver)?;
    EigList::new(s.column_vector().iter().copied().collect())
}

/// Binned empirical spectral distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsdHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub n: usize,
    pub out_of_range: usize,
}

impl EsdHistogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// `count / (n * width)` per bin.
    pub fn densities(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, e)| c as f64 / (self.n as f64 * (e[1] - e[0])))
            .collect()
    }

    /// Writes `bin_left,bin_right,count,density` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bin_left,bin_right,count,density")?;
        for ((e, c), d) in self.edges.windows(2).zip(&self.counts).zip(self.densities()) {
            writeln!(w, "{:.16e},{:.16e},{},{:.16e}", e[0], e[1], c, d)?;
        }
        Ok(())
    }
}

/// Histogram with half-open bins `[e_i, e_{i+1})`; the last bin is closed.
pub fn esd_histogram(eigs: &EigList, edges: &[f64]) -> Result<EsdHistogram> {
    if edges.len() < 2 {
        return Err(EslError::InvalidParameter("a histogram needs at least two edges".into()));
    }
    if edges.windows(2).any(|e| !(e[0] < e[1])) || edges.iter().any(|e| !e.is_finite()) {
        return Err(EslError::InvalidParameter("histogram edges must be finite and strictly increasing".into()));
    }
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    let mut counts = vec![0usize; bins];
    let mut out_of_range = 0;
    for &v in eigs.as_slice() {
        if v < lo || v > hi {
            out_of_range += 1;
            continue;
        }
        // index of the last edge <= v, capped so that v = hi lands in the last bin
        let k = edges.partition_point(|&e| e <= v).saturating_sub(1).min(bins - 1);
        counts[k] += 1;
    }
    Ok(EsdHistogram { edges: edges.to_vec(), counts, n: eigs.len(), out_of_range })
}

/// `bins` equal-width bins over the eigenvalue range padded by `DEFAULT_PAD`
/// of its width on each side.
pub fn default_edges(eigs: &EigList, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(EslError::InvalidParameter("bins must be positive".into()));
    }
    let (lo, hi) = match (eigs.min(), eigs.max()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(EslError::InvalidParameter("empty eigenvalue list".into())),
    };
    let range = hi - lo;
    let pad = if range > 0.0 { DEFAULT_PAD * range } else { 0.5 * lo.abs().max(1.0) };
    let (a, b) = (lo - pad, hi + pad);
    let width = (b - a) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| a + width * i as f64).collect();
    edges.push(b);
    Ok(edges)
}

/// `(1/n) sum_i 1/(lambda_i - z)`.
pub fn empirical_stieltjes(eigs: &EigList, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 || !z.im.is_finite() || !z.re.is_finite() {
        return Err(EslError::RealArgument(z));
    }
    if eigs.is_empty() {
        return Err(EslError::InvalidParameter("empty eigenvalue list".into()));
    }
    let sum: Complex64 = eigs.as_slice().iter().map(|&l| (Complex64::new(l, 0.0) - z).inv()).sum();
    Ok(sum / eigs.len() as f64)
}

/// `#{lambda_i <= t} / n`.
pub fn empirical_cdf(eigs: &EigList, t: f64) -> f64 {
    if eigs.is_empty() {
        return 0.0;
    }
    eigs.as_slice().partition_point(|&v| v <= t) as f64 / eigs.len() as f64
}

/// Left limit `#{lambda_i < t} / n`.
pub fn empirical_cdf_left(eigs: &EigList, t: f64) -> f64 {
    if eigs.is_empty() {
        return 0.0;
    }
    eigs.as_slice().partition_point(|&v| v < t) as f64 / eigs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{block_l_from_edges, ActiveEdge};

    fn eigs(v: &[f64]) -> EigList {
        EigList::new(v.to_vec()).unwrap()
    }

    #[test]
    fn small_spectra() {
        let d = SymmetricMatrixSample::from_fn(3, |i, j| if i == 0 && j == 0 { 1.0 } else { 0.0 });
        assert_eq!(eigenvalues_symmetric(&d).unwrap().as_slice(), &[0.0, 0.0, 1.0]);
        let swap = SymmetricMatrixSample::from_fn(2, |i, j| if i != j { 1.0 } else { 0.0 });
        let e = eigenvalues_symmetric(&swap).unwrap();
        assert!((e.as_slice()[0] + 1.0).abs() < 1e-15 && (e.as_slice()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_edge_block_laplacian() {
        let s = 1.0 / 3f64.sqrt();
        let edge = ActiveEdge { k: 0, l: 1, xi: 1.0, v: vec![s, s, s] };
        let (lower, _) = block_l_from_edges(2, 3, &[edge]);
        let m = SymmetricMatrixSample::from_lower(6, lower, 0, [0; 32]).unwrap();
        let e = eigenvalues_symmetric(&m).unwrap();
        let expect = [0.0, 0.0, 0.0, 0.0, 0.0, 2.0];
        assert!(e.as_slice().iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn trace_and_norm_are_preserved() {
        let m = SymmetricMatrixSample::from_fn(60, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0 + 0.1 * i as f64);
        let e = eigenvalues_symmetric(&m).unwrap();
        let tr = m.trace();
        assert!((e.sum() - tr).abs() <= 1e-8 * (1.0 + tr.abs()));
        assert!((e.sum_sq() - m.frobenius_sq()).abs() <= 1e-8 * m.frobenius_sq());
        assert!(e.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn non_finite_rejected() {
        let m = SymmetricMatrixSample::from_fn(3, |i, j| if i == 2 && j == 1 { f64::NAN } else { 1.0 });
        assert!(matches!(eigenvalues_symmetric(&m), Err(EslError::NonFinite { row: 2, col: 1 })));
    }

    #[test]
    fn histogram_examples() {
        let h = esd_histogram(&eigs(&[1.0, 2.0, 3.0]), &[0.0, 2.0, 4.0]).unwrap();
        assert_eq!(h.counts, vec![1, 2]);
        assert_eq!(h.out_of_range, 0);
        let h = esd_histogram(&eigs(&[1.0, 2.0, 3.0]), &[0.0, 1.0, 1.5, 3.0]).unwrap();
        assert_eq!(h.counts, vec![0, 1, 2]);
        let h = esd_histogram(&eigs(&[-1.0, 0.5, 7.0]), &[0.0, 1.0]).unwrap();
        assert_eq!((h.counts.clone(), h.out_of_range), (vec![1], 2));
        assert!(esd_histogram(&eigs(&[1.0]), &[0.0]).is_err());
        assert!(esd_histogram(&eigs(&[1.0]), &[0.0, 0.0]).is_err());
    }

    #[test]
    fn histogram_density_integrates_to_in_range_fraction() {
        let e = eigs(&[0.1, 0.2, 0.2, 0.9, 1.7, 5.0]);
        let h = esd_histogram(&e, &[0.0, 0.5, 1.0, 2.0]).unwrap();
        let mass: f64 = h.densities().iter().zip(h.edges.windows(2)).map(|(d, w)| d * (w[1] - w[0])).sum();
        assert!((mass - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn default_edges_cover_the_spectrum() {
        let e = eigs(&[-1.0, 0.0, 3.0]);
        let edges = default_edges(&e, 100).unwrap();
        assert_eq!(edges.len(), 101);
        assert!((edges[0] + 1.2).abs() < 1e-12 && (edges[100] - 3.2).abs() < 1e-12);
        assert_eq!(esd_histogram(&e, &edges).unwrap().out_of_range, 0);
        let single = default_edges(&eigs(&[2.0, 2.0]), 4).unwrap();
        assert!(single[0] < 2.0 && single[4] > 2.0);
    }

    #[test]
    fn stieltjes_examples() {
        let s = empirical_stieltjes(&eigs(&[0.0]), Complex64::i()).unwrap();
        assert!((s - Complex64::i()).norm() < 1e-15);
        let s = empirical_stieltjes(&eigs(&[1.0]), Complex64::new(0.0, 2.0)).unwrap();
        assert!((s - Complex64::new(1.0, 2.0) / 5.0).norm() < 1e-15);
        let e = eigs(&[-3.0, 0.5, 2.0, 4.0]);
        let eta = 1e6;
        let s = empirical_stieltjes(&e, Complex64::new(0.0, eta)).unwrap();
        assert!((Complex64::new(0.0, eta) * s + 1.0).norm() <= 2.0 * e.max_abs() / eta);
        assert!(empirical_stieltjes(&e, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn cdf_examples() {
        let e = eigs(&[1.0, 2.0, 3.0]);
        assert_eq!(empirical_cdf(&e, 2.0), 2.0 / 3.0);
        assert_eq!(empirical_cdf_left(&e, 2.0), 1.0 / 3.0);
        assert_eq!(empirical_cdf(&e, 0.0), 0.0);
        assert_eq!(empirical_cdf(&e, 10.0), 1.0);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let e = eigs(&[-1.0 / 3.0, 1e-300, std::f64::consts::PI, 12345.678901234567]);
        let mut buf = Vec::new();
        e.write_txt(&mut buf).unwrap();
        let text = format!("# comment\n{}", String::from_utf8(buf).unwrap());
        assert_eq!(EigList::read_txt(text.as_bytes()).unwrap(), e);
    }
}
