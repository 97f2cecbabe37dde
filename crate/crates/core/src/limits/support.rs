//! Support detection, distribution functions and integrals against a law.

use rayon::prelude::*;

use super::closed::{mp_edges, shifted_semicircle_edges};
use super::quad::{node, node_inverse, tanh_sinh, GL8, T_MAX};
use super::{Atom, LimitLaw, SolverOptions};
use crate::error::{EslError, Result};

/// Allowed deviation of the total mass from one.
pub const MASS_TOL: f64 = 1e-6;
const QUAD_TOL: f64 = 1e-10;
const SCAN_POINTS: usize = 4000;
const SCAN_ATTEMPTS: usize = 6;
const BISECTIONS: usize = 60;
/// Step of the `t` grid of [`LawCdf`] tables.
const TABLE_STEP: f64 = 1.0 / 32.0;

/// Support of a law: intervals carrying the continuous part (split at atoms
/// and at the origin) plus the atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct LawSupport {
    pub pieces: Vec<(f64, f64)>,
    pub piece_masses: Vec<f64>,
    pub atoms: Vec<Atom>,
}

impl LawSupport {
    pub fn continuous_mass(&self) -> f64 {
        self.piece_masses.iter().sum()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.continuous_mass() + self.atom_mass()
    }

    /// Smallest and largest point of the support.
    pub fn hull(&self) -> Option<(f64, f64)> {
        let pts = self.pieces.iter().flat_map(|&(a, b)| [a, b]).chain(self.atoms.iter().map(|a| a.location));
        pts.fold(None, |acc, x| match acc {
            None => Some((x, x)),
            Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
        })
    }

    /// `int g dN` over the continuous part plus the atoms.
    pub fn integrate(&self, law: &LimitLaw, g: impl Fn(f64) -> f64, opts: &SolverOptions) -> Result<f64> {
        let mut total: f64 = self.atoms.iter().map(|a| a.weight * g(a.location)).sum();
        for &(lo, hi) in &self.pieces {
            let mut err = None;
            let r = tanh_sinh(
                |x| match law.density(x, opts) {
                    Ok(d) => d * g(x),
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                },
                lo,
                hi,
                QUAD_TOL,
            )?;
            if let Some(e) = err {
                return Err(e);
            }
            total += r.value;
        }
        Ok(total)
    }
}

fn split_at(pieces: Vec<(f64, f64)>, cuts: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (lo, hi) in pieces {
        let mut start = lo;
        let mut inner: Vec<f64> = cuts.iter().copied().filter(|&c| c > lo && c < hi).collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        for c in inner {
            out.push((start, c));
            start = c;
        }
        out.push((start, hi));
    }
    out
}

fn piece_mass(law: &LimitLaw, lo: f64, hi: f64, opts: &SolverOptions) -> Result<f64> {
    let mut err = None;
    let r = tanh_sinh(
        |x| {
            law.density(x, opts).unwrap_or_else(|e| {
                err.get_or_insert(e);
                0.0
            })
        },
        lo,
        hi,
        QUAD_TOL,
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(r.value),
    }
}

fn finish(law: &LimitLaw, pieces: Vec<(f64, f64)>, opts: &SolverOptions) -> Result<LawSupport> {
    let atoms = law.atoms();
    let mut cuts: Vec<f64> = atoms.iter().map(|a| a.location).collect();
    cuts.push(0.0);
    let pieces = split_at(pieces, &cuts);
    let piece_masses =
        pieces.par_iter().map(|&(lo, hi)| piece_mass(law, lo, hi, opts)).collect::<Result<Vec<f64>>>()?;
    Ok(LawSupport { pieces, piece_masses, atoms })
}

fn initial_radius(law: &LimitLaw) -> f64 {
    match law {
        LimitLaw::EffectiveMedium { c } => 4.0 * (1.0 + c),
        LimitLaw::FixedPoint { measure, a } => {
            4.0 * (1.0 + measure.total_variation() * (1.0 + a * measure.max_abs_xi()))
        }
        LimitLaw::AdjacencyGeneral { measure } => {
            4.0 * (1.0 + 2.0 * measure.total_variation() * (1.0 + measure.max_abs_xi()))
        }
        _ => 4.0,
    }
}

fn in_support(law: &LimitLaw, x: f64, opts: &SolverOptions) -> Result<bool> {
    Ok(law.density(x, opts)? > 0.0)
}

fn refine_edge(law: &LimitLaw, mut outside: f64, mut inside: f64, opts: &SolverOptions) -> Result<f64> {
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (outside + inside);
        if mid == outside || mid == inside {
            break;
        }
        if in_support(law, mid, opts)? {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(inside)
}

/// Intervals where the density is positive, found on a uniform grid over
/// `[-radius, radius]`. The flag reports a run touching the grid boundary.
fn scan(law: &LimitLaw, radius: f64, points: usize, opts: &SolverOptions) -> Result<(Vec<(f64, f64)>, bool)> {
    let step = 2.0 * radius / points as f64;
    // offset by half a step so that the origin is never a grid point
    let xs: Vec<f64> = (0..points).map(|i| -radius + (i as f64 + 0.5) * step).collect();
    let flags = xs.par_iter().map(|&x| in_support(law, x, opts)).collect::<Result<Vec<bool>>>()?;
    let touches = flags[0] || flags[points - 1];
    let mut intervals = Vec::new();
    let mut i = 0;
    while i < points {
        if !flags[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < points && flags[i] {
            i += 1;
        }
        let end = i - 1;
        let lo = if start == 0 { xs[0] } else { refine_edge(law, xs[start - 1], xs[start], opts)? };
        let hi = if end == points - 1 { xs[end] } else { refine_edge(law, xs[end + 1], xs[end], opts)? };
        intervals.push((lo, hi));
    }
    Ok((intervals, touches))
}

/// Support and masses of a law. Closed-form laws use their analytic edges;
/// the others are scanned on a grid that is widened and refined until the
/// captured mass plus atoms equals one within [`MASS_TOL`].
pub fn law_support(law: &LimitLaw, opts: &SolverOptions) -> Result<LawSupport> {
    law.validate()?;
    let pieces = match law {
        LimitLaw::MarchenkoPastur { b, c1 } => Some(mp_pieces(*b, *c1)),
        LimitLaw::BlockLaplacian { c } => Some(mp_pieces(2.0, *c)),
        LimitLaw::ShiftedSemicircle { c1, c2 } => Some(vec![shifted_semicircle_edges(*c1, *c2)]),
        _ => None,
    };
    if let Some(pieces) = pieces {
        return finish(law, pieces, opts);
    }
    let atom_mass: f64 = law.atoms().iter().map(|a| a.weight).sum();
    if atom_mass >= 1.0 - 1e-12 {
        return finish(law, Vec::new(), opts);
    }
    let mut radius = initial_radius(law);
    let mut points = SCAN_POINTS;
    let mut deficit = f64::INFINITY;
    for _ in 0..SCAN_ATTEMPTS {
        let (intervals, touches) = scan(law, radius, points, opts)?;
        if touches {
            radius *= 2.0;
            continue;
        }
        let support = finish(law, intervals, opts)?;
        deficit = (support.total_mass() - 1.0).abs();
        if deficit <= MASS_TOL {
            return Ok(support);
        }
        // mass is missing from bands narrower than the grid or beyond it
        radius *= 2.0;
        points *= 4;
    }
    Err(EslError::Quadrature { requested: MASS_TOL, achieved: deficit })
}

fn mp_pieces(b: f64, c1: f64) -> Vec<(f64, f64)> {
    if b == 0.0 || c1 == 0.0 {
        return Vec::new();
    }
    let (lo, hi) = mp_edges(b, c1);
    if lo < hi {
        vec![(lo, hi)]
    } else {
        Vec::new()
    }
}

/// Distribution function `N((-inf, t])` by adaptive quadrature of the
/// density, with atoms added as jumps.
pub fn cdf_from_density(law: &LimitLaw, t: f64, opts: &SolverOptions) -> Result<f64> {
    let support = law_support(law, opts)?;
    let mut total: f64 = support.atoms.iter().filter(|a| a.location <= t).map(|a| a.weight).sum();
    for (&(lo, hi), &mass) in support.pieces.iter().zip(&support.piece_masses) {
        if t >= hi {
            total += mass;
        } else if t > lo {
            total += piece_mass(law, lo, t, opts)?;
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Cumulative table of one support piece on the tanh-sinh `t` grid.
#[derive(Debug, Clone)]
struct PieceTable {
    lo: f64,
    hi: f64,
    /// Cumulative mass at the grid nodes.
    cum: Vec<f64>,
    /// `d(mass)/dt` at the grid nodes.
    deriv: Vec<f64>,
}

impl PieceTable {
    fn build(law: &LimitLaw, lo: f64, hi: f64, opts: &SolverOptions) -> Result<Self> {
        let n = (2.0 * T_MAX / TABLE_STEP).round() as usize;
        let h = TABLE_STEP;
        let g = |t: f64| -> Result<f64> {
            match node(lo, hi, t) {
                Some((x, w)) => Ok(law.density(x, opts)? * w),
                None => Ok(0.0),
            }
        };
        let per_node = (0..=n)
            .into_par_iter()
            .map(|i| {
                let t0 = -T_MAX + i as f64 * h;
                let seg = if i < n {
                    let mid = t0 + 0.5 * h;
                    let mut s = 0.0;
                    for &(x, w) in &GL8 {
                        s += w * g(mid + 0.5 * h * x)?;
                    }
                    0.5 * h * s
                } else {
                    0.0
                };
                Ok((g(t0)?, seg))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let mut cum = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        for &(_, seg) in &per_node {
            cum.push(acc);
            acc += seg;
        }
        let deriv = per_node.iter().map(|p| p.0).collect();
        Ok(PieceTable { lo, hi, cum, deriv })
    }

    fn mass(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return self.mass();
        }
        let t = node_inverse(self.lo, self.hi, x);
        if !(t > -T_MAX) {
            return 0.0;
        }
        if t >= T_MAX {
            return self.mass();
        }
        let h = TABLE_STEP;
        let n = self.cum.len() - 1;
        let i = (((t + T_MAX) / h).floor() as usize).min(n - 1);
        let s = (t - (-T_MAX + i as f64 * h)) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * self.cum[i] + h10 * h * self.deriv[i] + h01 * self.cum[i + 1] + h11 * h * self.deriv[i + 1];
        v.clamp(self.cum[i].min(self.cum[i + 1]), self.cum[i].max(self.cum[i + 1]))
    }
}

/// Precomputed distribution function of a law for fast repeated evaluation.
#[derive(Debug, Clone)]
pub struct LawCdf {
    support: LawSupport,
    tables: Vec<PieceTable>,
}

impl LawCdf {
    pub fn new(law: &LimitLaw, opts: &SolverOptions) -> Result<Self> {
        let support = law_support(law, opts)?;
        let tables =
            support.pieces.iter().map(|&(lo, hi)| PieceTable::build(law, lo, hi, opts)).collect::<Result<Vec<_>>>()?;
        Ok(LawCdf { support, tables })
    }

    pub fn support(&self) -> &LawSupport {
        &self.support
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.support.atoms
    }

    /// Total mass captured by the tables and atoms.
    pub fn total_mass(&self) -> f64 {
        self.tables.iter().map(|t| t.mass()).sum::<f64>() + self.support.atom_mass()
    }

    /// `N((-inf, t])`.
    pub fn cdf(&self, t: f64) -> f64 {
        let atoms: f64 = self.support.atoms.iter().filter(|a| a.location <= t).map(|a| a.weight).sum();
        (atoms + self.tables.iter().map(|p| p.cdf(t)).sum::<f64>()).clamp(0.0, 1.0)
    }

    /// `N((-inf, t))`.
    pub fn cdf_left(&self, t: f64) -> f64 {
        let atoms: f64 = self.support.atoms.iter().filter(|a| a.location < t).map(|a| a.weight).sum();
        (atoms + self.tables.iter().map(|p| p.cdf(t)).sum::<f64>()).clamp(0.0, 1.0)
    }

    /// Smallest `x` with `cdf(x) >= p`, located by bisection.
    pub fn quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = match self.support.hull() {
            Some((a, b)) => (a - 1.0, b + 1.0),
            None => return 0.0,
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if self.cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Piece endpoints and atom locations.
    pub fn test_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.support.pieces.iter().flat_map(|&(a, b)| [a, b]).collect();
        pts.extend(self.support.atoms.iter().map(|a| a.location));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}
