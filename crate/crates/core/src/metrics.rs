//! Comparison of empirical spectra with limiting laws.

use serde::{Deserialize, Serialize};

use crate::error::{EslError, Result};
use crate::limits::{law_support, LawCdf, LimitLaw, SolverOptions};
use crate::spectra::{empirical_cdf, empirical_cdf_left, EigList};

/// Eigenvalues within this relative distance of a law atom are moved onto
/// it before comparing distribution functions.
pub const ATOM_SNAP: f64 = 1e-8;

fn snapped(eigs: &EigList, cdf: &LawCdf) -> Result<EigList> {
    let scale = 1.0 + eigs.max_abs();
    let atoms = cdf.atoms();
    if atoms.is_empty() {
        return Ok(eigs.clone());
    }
    let values = eigs
        .as_slice()
        .iter()
        .map(|&v| atoms.iter().find(|a| (v - a.location).abs() <= ATOM_SNAP * scale).map_or(v, |a| a.location))
        .collect();
    EigList::new(values)
}

/// `sup_t |F_n(t) - F(t)|` with both one-sided limits compared at every
/// eigenvalue, every atom and every support edge of the law.
pub fn ks_distance(eigs: &EigList, cdf: &LawCdf) -> Result<f64> {
    if eigs.is_empty() {
        return Err(EslError::InvalidParameter("empty eigenvalue list".into()));
    }
    let eigs = snapped(eigs, cdf)?;
    let n = eigs.len() as f64;
    let values = eigs.as_slice();
    let mut sup: f64 = 0.0;
    let mut i = 0;
    while i < values.len() {
        let v = values[i];
        let mut j = i;
        while j < values.len() && values[j] == v {
            j += 1;
        }
        let (below, at) = (i as f64 / n, j as f64 / n);
        sup = sup.max((at - cdf.cdf(v)).abs()).max((below - cdf.cdf_left(v)).abs());
        i = j;
    }
    for t in cdf.test_points() {
        sup = sup
            .max((empirical_cdf(&eigs, t) - cdf.cdf(t)).abs())
            .max((empirical_cdf_left(&eigs, t) - cdf.cdf_left(t)).abs());
    }
    Ok(sup.min(1.0))
}

/// Convenience wrapper building the law's distribution table first.
pub fn ks_distance_to_law(eigs: &EigList, law: &LimitLaw, opts: &SolverOptions) -> Result<f64> {
    ks_distance(eigs, &LawCdf::new(law, opts)?)
}

/// `(1/n) sum_i lambda_i^j` for `j = 0..=j_max` (index `j`).
pub fn esd_moments(eigs: &EigList, j_max: usize) -> Vec<f64> {
    let n = eigs.len() as f64;
    (0..=j_max).map(|j| eigs.as_slice().iter().map(|&v| v.powi(j as i32)).sum::<f64>() / n).collect()
}

/// `int lambda^j dN` for `j = 0..=j_max` (index `j`).
pub fn law_moments(law: &LimitLaw, j_max: usize, opts: &SolverOptions) -> Result<Vec<f64>> {
    let support = law_support(law, opts)?;
    (0..=j_max).map(|j| support.integrate(law, |x| x.powi(j as i32), opts)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentDiff {
    pub j: usize,
    pub emp: f64,
    pub theory: f64,
    pub diff: f64,
}

/// Outcome of comparing a pooled spectrum with a law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub ks: f64,
    pub moments: Vec<MomentDiff>,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub law: String,
    pub conjectural: bool,
    pub digest: String,
    pub version: String,
}

impl ComparisonReport {
    /// Compares `eigs` (pooled over `trials` samples of side `n`) with `law`
    /// using moments `1..=j_max`.
    pub fn build(eigs: &EigList, law: &LimitLaw, j_max: usize, meta: ReportMeta, opts: &SolverOptions) -> Result<Self> {
        let ks = ks_distance_to_law(eigs, law, opts)?;
        let emp = esd_moments(eigs, j_max);
        let theory = law_moments(law, j_max, opts)?;
        let moments = (1..=j_max)
            .map(|j| MomentDiff { j, emp: emp[j], theory: theory[j], diff: (emp[j] - theory[j]).abs() })
            .collect();
        Ok(ComparisonReport {
            ks,
            moments,
            n: meta.n,
            trials: meta.trials,
            seed: meta.seed,
            law: law.to_string(),
            conjectural: law.is_conjectural(),
            digest: meta.digest,
            version: meta.version,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| EslError::Io(e.to_string()))
    }
}

/// Run metadata recorded in a [`ComparisonReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportMeta {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub digest: String,
    pub version: String,
}

/// Median of a non-empty list (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty list");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn quantile_grid_has_half_step_distance() {
        let cdf = LawCdf::new(&LimitLaw::semicircle(), &opts()).unwrap();
        let n = 400;
        let eigs = EigList::new((0..n).map(|i| cdf.quantile((i as f64 + 0.5) / n as f64)).collect()).unwrap();
        let ks = ks_distance(&eigs, &cdf).unwrap();
        assert!((ks - 0.5 / n as f64).abs() < 1e-8, "{ks}");
    }

    #[test]
    fn atom_matched_exactly() {
        let cdf = LawCdf::new(&LimitLaw::MarchenkoPastur { b: 0.0, c1: 2.0 }, &opts()).unwrap();
        let eigs = EigList::new(vec![2.0; 50]).unwrap();
        assert_eq!(ks_distance(&eigs, &cdf).unwrap(), 0.0);
        let near = EigList::new(vec![2.0 + 1e-12; 50]).unwrap();
        assert_eq!(ks_distance(&near, &cdf).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_spectrum_has_distance_one() {
        let cdf = LawCdf::new(&LimitLaw::MarchenkoPastur { b: 1.0, c1: 1.0 }, &opts()).unwrap();
        let eigs = EigList::new((0..20).map(|i| 14.0 + 0.1 * i as f64).collect()).unwrap();
        assert!((ks_distance(&eigs, &cdf).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_moments() {
        let m = esd_moments(&EigList::new(vec![-1.0, 1.0]).unwrap(), 2);
        assert_eq!(m, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn theoretical_moments() {
        let m = law_moments(&LimitLaw::semicircle(), 4, &opts()).unwrap();
        for (got, want) in m.iter().zip([1.0, 0.0, 1.0, 0.0, 2.0]) {
            assert!((got - want).abs() < 1e-6, "{m:?}");
        }
        let m = law_moments(&LimitLaw::MarchenkoPastur { b: 0.0, c1: 2.0 }, 2, &opts()).unwrap();
        assert_eq!(m, vec![1.0, 2.0, 4.0]);
        // m1 = c1 and m2 = b c1 + c1^2
        let m = law_moments(&LimitLaw::MarchenkoPastur { b: 1.5, c1: 0.8 }, 2, &opts()).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-6 && (m[1] - 0.8).abs() < 1e-6 && (m[2] - (1.2 + 0.64)).abs() < 1e-6);
    }

    #[test]
    fn effective_medium_moments() {
        // E Tr A^2 / n: each active pair contributes 2 xi^2 |v|^4 / n, so m2 = c
        let m = law_moments(&LimitLaw::EffectiveMedium { c: 1.0 }, 2, &opts()).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-5 && m[1].abs() < 1e-6 && (m[2] - 1.0).abs() < 1e-5, "{m:?}");
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
