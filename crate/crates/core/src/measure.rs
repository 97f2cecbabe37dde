//! Weight distributions of the rank-one coefficients and the signed measure
//! `nu(dxi) = (m/n) * xi * sigma(dxi)` that drives the limiting equations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{EslError, Result};

const PROB_SUM_TOL: f64 = 1e-12;

/// Law of the scalar weights attached to every rank-one term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum XiSpec {
    /// Deterministic weight `b`.
    Const(f64),
    /// `1` with probability `p`, otherwise `0`.
    Bernoulli(f64),
    /// `+s` or `-s`, each with probability 1/2.
    Rademacher(f64),
    /// Finite law given as `(value, probability)` pairs.
    Atoms(Vec<(f64, f64)>),
}

impl XiSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            XiSpec::Const(b) if !b.is_finite() => {
                Err(EslError::InvalidParameter(format!("const weight must be finite, got {b}")))
            }
            XiSpec::Bernoulli(p) if !(*p > 0.0 && *p <= 1.0) => {
                Err(EslError::InvalidParameter(format!("bernoulli p must lie in (0, 1], got {p}")))
            }
            XiSpec::Rademacher(s) if !(*s > 0.0 && s.is_finite()) => {
                Err(EslError::InvalidParameter(format!("rademacher scale must be positive, got {s}")))
            }
            XiSpec::Atoms(atoms) => {
                if atoms.is_empty() {
                    return Err(EslError::InvalidParameter("atoms list is empty".into()));
                }
                let mut total = 0.0;
                for (i, &(v, p)) in atoms.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(EslError::InvalidParameter(format!("atom value {v} is not finite")));
                    }
                    if !(p > 0.0) {
                        return Err(EslError::InvalidParameter(format!("atom probability must be positive, got {p}")));
                    }
                    if atoms[..i].iter().any(|&(u, _)| u == v) {
                        return Err(EslError::DuplicateAtom(v));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > PROB_SUM_TOL {
                    return Err(EslError::InvalidParameter(format!("atom probabilities sum to {total}, expected 1")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Support points with their probabilities, zero-probability points omitted.
    pub fn support(&self) -> Vec<(f64, f64)> {
        match *self {
            XiSpec::Const(b) => vec![(b, 1.0)],
            XiSpec::Bernoulli(1.0) => vec![(1.0, 1.0)],
            XiSpec::Bernoulli(p) => vec![(1.0, p), (0.0, 1.0 - p)],
            XiSpec::Rademacher(s) => vec![(s, 0.5), (-s, 0.5)],
            XiSpec::Atoms(ref atoms) => atoms.clone(),
        }
    }

    /// `E xi^j`, by enumeration over the support.
    pub fn raw_moment(&self, j: u32) -> f64 {
        self.support().iter().map(|&(v, p)| p * v.powi(j as i32)).sum()
    }
}

impl fmt::Display for XiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XiSpec::Const(b) => write!(f, "const:{b}"),
            XiSpec::Bernoulli(p) => write!(f, "bernoulli:{p}"),
            XiSpec::Rademacher(s) => write!(f, "rademacher:{s}"),
            XiSpec::Atoms(atoms) => {
                write!(f, "atoms:")?;
                for (i, (v, p)) in atoms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}@{p}")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_real(input: &str, token: &str) -> Result<f64> {
    token.trim().parse::<f64>().map_err(|e| EslError::Parse {
        input: input.to_string(),
        reason: format!("`{token}` is not a real number ({e})"),
    })
}

impl FromStr for XiSpec {
    type Err = EslError;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, body) = s
            .split_once(':')
            .ok_or_else(|| EslError::Parse { input: s.to_string(), reason: "expected `<kind>:<parameters>`".into() })?;
        let spec = match tag.trim() {
            "const" => XiSpec::Const(parse_real(s, body)?),
            "bernoulli" => XiSpec::Bernoulli(parse_real(s, body)?),
            "rademacher" => XiSpec::Rademacher(parse_real(s, body)?),
            "atoms" => {
                let atoms = body
                    .split(',')
                    .map(|pair| {
                        let (v, p) = pair.split_once('@').ok_or_else(|| EslError::Parse {
                            input: s.to_string(),
                            reason: format!("atom `{pair}` must look like <value>@<probability>"),
                        })?;
                        Ok((parse_real(s, v)?, parse_real(s, p)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                XiSpec::Atoms(atoms)
            }
            other => {
                return Err(EslError::Parse { input: s.to_string(), reason: format!("unknown weight law `{other}`") })
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl TryFrom<String> for XiSpec {
    type Error = EslError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<XiSpec> for String {
    fn from(x: XiSpec) -> String {
        x.to_string()
    }
}

/// Finite signed measure on the real line, stored as `(xi, weight)` atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMeasure {
    atoms: Vec<(f64, f64)>,
    total_mass: f64,
}

impl WeightMeasure {
    /// Builds a measure from raw atoms. Atoms at `xi = 0` or with zero weight
    /// are dropped since they never enter the limiting equations.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let mut kept: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (xi, w) in atoms {
            if !xi.is_finite() || !w.is_finite() {
                return Err(EslError::InvalidParameter(format!("non-finite atom ({xi}, {w})")));
            }
            if kept.iter().any(|&(x, _)| x == xi) {
                return Err(EslError::DuplicateAtom(xi));
            }
            if xi != 0.0 && w != 0.0 {
                kept.push((xi, w));
            }
        }
        let total_mass = kept.iter().map(|&(_, w)| w).sum();
        Ok(WeightMeasure { atoms: kept, total_mass })
    }

    /// Single atom of mass `c1` at `b`.
    pub fn point(b: f64, c1: f64) -> Result<Self> {
        WeightMeasure::new(vec![(b, c1)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// `c1`, the total signed mass.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn max_abs_xi(&self) -> f64 {
        self.atoms.iter().fold(0.0, |acc, &(x, _)| acc.max(x.abs()))
    }

    /// Total variation `sum |w_k|`.
    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|&(_, w)| w.abs()).sum()
    }
}

impl fmt::Display for WeightMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (x, w)) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({x}, {w})")?;
        }
        write!(f, "}}")
    }
}

/// `c_j = int xi^(j-1) dnu` for `j = 1..=j_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    c: Vec<f64>,
}

impl MomentVector {
    /// One-based access: `get(1)` is the total mass.
    pub fn get(&self, j: usize) -> f64 {
        assert!(j >= 1 && j <= self.c.len(), "moment index {j} out of range");
        self.c[j - 1]
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.c
    }
}

/// Finite-`n` weight measure: atoms `(xi_k, (m/n) * xi_k * p_k)`.
pub fn measure_from_xi(xi: &XiSpec, m: usize, n: usize) -> Result<WeightMeasure> {
    if m == 0 || n == 0 {
        return Err(EslError::InvalidParameter(format!("m and n must be positive (m={m}, n={n})")));
    }
    xi.validate()?;
    let ratio = m as f64 / n as f64;
    let atoms = xi.support().into_iter().map(|(v, p)| (v, ratio * v * p)).collect();
    WeightMeasure::new(atoms)
}

pub fn moments(measure: &WeightMeasure, j_max: usize) -> MomentVector {
    assert!(j_max >= 1, "j_max must be at least 1");
    let c = (1..=j_max).map(|j| measure.atoms.iter().map(|&(x, w)| w * x.powi(j as i32 - 1)).sum()).collect();
    MomentVector { c }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn const_weight_gives_unit_atom() {
        let m = measure_from_xi(&XiSpec::Const(1.0), 1000, 1000).unwrap();
        assert_eq!(m.atoms(), &[(1.0, 1.0)]);
        assert_eq!(m.total_mass(), 1.0);
    }

    #[test]
    fn sparse_bernoulli_gives_unit_atom() {
        let m = measure_from_xi(&XiSpec::Bernoulli(0.002), 500_000, 1000).unwrap();
        assert_eq!(m.atoms().len(), 1);
        assert_eq!(m.atoms()[0].0, 1.0);
        assert_relative_eq!(m.atoms()[0].1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rademacher_measure_is_signed() {
        let s = (100.0f64 / 10_000.0).sqrt();
        let m = measure_from_xi(&XiSpec::Rademacher(s), 10_000, 100).unwrap();
        // (m/n) * (+-s) * 1/2 = 100 * 0.1 * 0.5
        assert_eq!(m.atoms().len(), 2);
        assert_relative_eq!(m.atoms()[0].0, 0.1, epsilon = 1e-15);
        assert_relative_eq!(m.atoms()[0].1, 5.0, epsilon = 1e-12);
        assert_relative_eq!(m.atoms()[1].1, -5.0, epsilon = 1e-12);
        assert_eq!(m.total_mass(), 0.0);
    }

    #[test]
    fn zero_atoms_are_dropped() {
        let m = measure_from_xi(&XiSpec::Bernoulli(0.3), 10, 10).unwrap();
        assert_eq!(m.atoms(), &[(1.0, 0.3)]);
    }

    #[test]
    fn duplicate_atoms_rejected() {
        let xi = XiSpec::Atoms(vec![(1.0, 0.5), (1.0, 0.5)]);
        assert_eq!(measure_from_xi(&xi, 1, 1), Err(EslError::DuplicateAtom(1.0)));
        assert!(WeightMeasure::new(vec![(2.0, 1.0), (2.0, -1.0)]).is_err());
    }

    #[test]
    fn moment_examples() {
        let unit = WeightMeasure::point(1.0, 1.0).unwrap();
        assert_eq!(moments(&unit, 3).as_slice(), &[1.0, 1.0, 1.0]);

        let rad = WeightMeasure::new(vec![(0.1, 0.5), (-0.1, -0.5)]).unwrap();
        let c = moments(&rad, 3);
        assert_eq!(c.get(1), 0.0);
        assert_relative_eq!(c.get(2), 0.1, epsilon = 1e-15);
        assert_eq!(c.get(3), 0.0);

        let scaled = WeightMeasure::point(2.0, 3.0).unwrap();
        assert_eq!(moments(&scaled, 2).as_slice(), &[3.0, 6.0]);
    }

    #[test]
    fn rademacher_moments_in_modified_regime() {
        let (m, n) = (20_000usize, 1000usize);
        let s = (n as f64 / m as f64).sqrt();
        let c = moments(&measure_from_xi(&XiSpec::Rademacher(s), m, n).unwrap(), 7);
        assert_relative_eq!(c.get(2), 1.0, epsilon = 1e-12);
        for j in [1, 3, 5, 7] {
            assert_eq!(c.get(j), 0.0, "c_{j}");
        }
        assert!(c.get(4) <= n as f64 / m as f64 * (1.0 + 1e-12));
        assert_relative_eq!(c.get(4), n as f64 / m as f64, epsilon = 1e-12);
    }

    #[test]
    fn grammar_round_trip() {
        for text in ["const:2.5", "bernoulli:0.25", "rademacher:0.1", "atoms:-1@0.25,2@0.75"] {
            let xi: XiSpec = text.parse().unwrap();
            assert_eq!(xi.to_string(), text);
        }
    }

    #[test]
    fn grammar_rejects_bad_input() {
        assert!("bernoulli:1.5".parse::<XiSpec>().is_err());
        assert!("rademacher:0".parse::<XiSpec>().is_err());
        assert!("atoms:1@0.5,2@0.6".parse::<XiSpec>().is_err());
        assert!("atoms:1@0.5,1@0.5".parse::<XiSpec>().is_err());
        assert!("gauss:1".parse::<XiSpec>().is_err());
        assert!("const".parse::<XiSpec>().is_err());
        assert!("const:abc".parse::<XiSpec>().is_err());
    }
}
