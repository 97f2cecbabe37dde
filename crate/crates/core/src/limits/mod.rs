//! Limiting spectral laws: closed-form densities, branch-selected roots of
//! the quadratic and cubic Stieltjes equations, the general fixed-point
//! equations, and inversion of a Stieltjes transform back to a density.

mod closed;
mod effective_medium;
mod fixed_point;
mod inversion;
pub mod poly;
pub mod quad;
mod support;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{EslError, Result};
use crate::measure::WeightMeasure;

pub use closed::{
    block_laplacian_density, mp_density, mp_stieltjes, shifted_semicircle_density, shifted_semicircle_stieltjes,
    DensityValue,
};
pub use effective_medium::effective_medium_stieltjes;
pub use fixed_point::{adjacency_general_stieltjes, fixed_point_stieltjes};
pub use inversion::{density_from_stieltjes, DEFAULT_ETA_SCHEDULE};
pub use support::{cdf_from_density, law_support, LawCdf, LawSupport};

/// Tolerances and iteration controls shared by all solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Residual tolerance of the iterative fixed-point solvers.
    pub tol: f64,
    /// Residual tolerance of the polynomial (quadratic and cubic) solvers.
    pub poly_tol: f64,
    /// Iteration cap per solve (per continuation step).
    pub max_iter: usize,
    /// Initial damping of the fixed-point map.
    pub theta: f64,
    /// Imaginary part where continuation paths start.
    pub eta_start: f64,
    /// Geometric ratio between consecutive continuation steps.
    pub eta_ratio: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, poly_tol: 1e-12, max_iter: 5000, theta: 0.5, eta_start: 10.0, eta_ratio: 0.5 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tol > 0.0
            && self.poly_tol > 0.0
            && self.max_iter > 0
            && self.theta > 0.0
            && self.theta <= 1.0
            && self.eta_start > 0.0
            && self.eta_ratio > 0.0
            && self.eta_ratio < 1.0;
        if ok {
            Ok(())
        } else {
            Err(EslError::InvalidParameter(format!("invalid solver options {self:?}")))
        }
    }

    /// Decreasing imaginary parts from `eta_start` down to `eta` inclusive.
    pub(crate) fn continuation_etas(&self, eta: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut e = self.eta_start;
        while e > eta {
            out.push(e);
            e *= self.eta_ratio;
        }
        out.push(eta);
        out
    }
}

/// How a Stieltjes value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SolvePath {
    /// Explicit formula or a uniquely admissible polynomial root.
    Closed,
    /// Plain iteration from `-1/z`.
    Direct,
    /// Warm-started along `Re z + i eta` with `eta` decreasing from the
    /// configured start.
    Continuation { steps: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub f: Complex64,
    /// Modulus of the defining equation re-evaluated at `f`. Polynomial laws
    /// divide it by `sum |c_k| |f|^k`, which keeps the check meaningful when
    /// `|f|` is large next to an atom.
    pub residual: f64,
    pub iterations: usize,
    pub branch_note: String,
    pub path: SolvePath,
    /// Set for laws whose defining equation is conjectured rather than proved.
    pub conjectural: bool,
}

/// A point mass of a limiting law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// A limiting spectral law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum LimitLaw {
    /// `b z f^2 + (z + b - c1) f + 1 = 0`.
    MarchenkoPastur { b: f64, c1: f64 },
    /// `c2 f^2 + (z - c1) f + 1 = 0`.
    ShiftedSemicircle { c1: f64, c2: f64 },
    /// `2 z f^2 + (z + 2 - c) f + 1 = 0`, the Marchenko-Pastur law with `b = 2`.
    BlockLaplacian { c: f64 },
    /// `z f^3 + (1 - c) f^2 - z f - 1 = 0`.
    EffectiveMedium { c: f64 },
    /// `z f = -1 + a f sum_k w_k / (1 + a xi_k f)`.
    FixedPoint { measure: WeightMeasure, a: f64 },
    /// `z f = -1 - 2 f^2 sum_k w_k xi_k / (1 - xi_k^2 f^2)`.
    AdjacencyGeneral { measure: WeightMeasure },
}

impl fmt::Display for LimitLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitLaw::MarchenkoPastur { b, c1 } => write!(f, "MarchenkoPastur(b={b},c1={c1})"),
            LimitLaw::ShiftedSemicircle { c1, c2 } => write!(f, "ShiftedSemicircle(c1={c1},c2={c2})"),
            LimitLaw::BlockLaplacian { c } => write!(f, "BlockLaplacian(c={c})"),
            LimitLaw::EffectiveMedium { c } => write!(f, "EffectiveMedium(c={c})"),
            LimitLaw::FixedPoint { measure, a } => write!(f, "FixedPoint(a={a},measure={measure})"),
            LimitLaw::AdjacencyGeneral { measure } => write!(f, "AdjacencyGeneral(measure={measure})"),
        }
    }
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(EslError::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(EslError::InvalidParameter(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl LimitLaw {
    pub fn semicircle() -> Self {
        LimitLaw::ShiftedSemicircle { c1: 0.0, c2: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LimitLaw::MarchenkoPastur { b, c1 } => {
                nonneg("b", *b)?;
                positive("c1", *c1)
            }
            LimitLaw::ShiftedSemicircle { c1, c2 } => {
                if !c1.is_finite() {
                    return Err(EslError::InvalidParameter(format!("c1 must be finite, got {c1}")));
                }
                positive("c2", *c2)
            }
            LimitLaw::BlockLaplacian { c } | LimitLaw::EffectiveMedium { c } => nonneg("c", *c),
            LimitLaw::FixedPoint { a, .. } => positive("a", *a),
            LimitLaw::AdjacencyGeneral { .. } => Ok(()),
        }
    }

    pub fn is_conjectural(&self) -> bool {
        matches!(self, LimitLaw::AdjacencyGeneral { .. })
    }

    /// Stieltjes transform `f(z)` for `Im z > 0`, certified against the
    /// admissibility constraints.
    pub fn stieltjes(&self, z: Complex64, opts: &SolverOptions) -> Result<SolveReport> {
        self.validate()?;
        match self {
            LimitLaw::MarchenkoPastur { b, c1 } => closed::mp_stieltjes_opts(*b, *c1, z, opts),
            LimitLaw::ShiftedSemicircle { c1, c2 } => closed::ss_stieltjes_opts(*c1, *c2, z, opts),
            LimitLaw::BlockLaplacian { c } => closed::mp_stieltjes_opts(2.0, *c, z, opts),
            LimitLaw::EffectiveMedium { c } => effective_medium::em_stieltjes_opts(*c, z, opts),
            LimitLaw::FixedPoint { measure, a } => fixed_point_stieltjes(measure, *a, z, opts),
            LimitLaw::AdjacencyGeneral { measure } => adjacency_general_stieltjes(measure, z, opts),
        }
    }

    /// Point masses of the law, sorted by location.
    pub fn atoms(&self) -> Vec<Atom> {
        let zero_atom = |weight: f64| {
            if weight > 1e-15 {
                vec![Atom { location: 0.0, weight: weight.min(1.0) }]
            } else {
                Vec::new()
            }
        };
        match self {
            LimitLaw::MarchenkoPastur { b, c1 } => closed::mp_atoms(*b, *c1),
            LimitLaw::BlockLaplacian { c } => closed::mp_atoms(2.0, *c),
            LimitLaw::ShiftedSemicircle { .. } => Vec::new(),
            LimitLaw::EffectiveMedium { c } => zero_atom(1.0 - c),
            LimitLaw::FixedPoint { measure, .. } => {
                zero_atom(1.0 - measure.atoms().iter().map(|&(x, w)| w / x).sum::<f64>())
            }
            LimitLaw::AdjacencyGeneral { measure } => {
                zero_atom(1.0 - 2.0 * measure.atoms().iter().map(|&(x, w)| w / x).sum::<f64>())
            }
        }
    }

    /// Density of the absolutely continuous part at a real point. Atom
    /// locations themselves report 0.
    pub fn density(&self, lambda: f64, opts: &SolverOptions) -> Result<f64> {
        self.validate()?;
        if !lambda.is_finite() {
            return Err(EslError::InvalidParameter(format!("lambda must be finite, got {lambda}")));
        }
        if self.atoms().iter().any(|a| a.location == lambda) {
            return Ok(0.0);
        }
        match self {
            LimitLaw::MarchenkoPastur { b, c1 } => Ok(mp_density(*b, *c1, lambda).continuous()),
            LimitLaw::BlockLaplacian { c } => Ok(block_laplacian_density(*c, lambda).continuous()),
            LimitLaw::ShiftedSemicircle { c1, c2 } => Ok(shifted_semicircle_density(*c1, *c2, lambda)),
            LimitLaw::EffectiveMedium { c } => effective_medium::em_density(*c, lambda, opts),
            LimitLaw::FixedPoint { measure, a } => fixed_point::fixed_point_density(measure, *a, lambda, opts),
            LimitLaw::AdjacencyGeneral { measure } => fixed_point::adjacency_density(measure, lambda, opts),
        }
    }

    /// Values `xi` entering denominators `1 + xi f`, used by the a priori
    /// bound `|1 + xi f|^-1 <= max(2, 4|xi|/Im z)`.
    pub fn bound_weights(&self) -> Vec<f64> {
        match self {
            LimitLaw::MarchenkoPastur { b, .. } => vec![*b],
            LimitLaw::BlockLaplacian { .. } => vec![2.0],
            LimitLaw::ShiftedSemicircle { .. } => Vec::new(),
            LimitLaw::EffectiveMedium { .. } => vec![1.0, -1.0],
            LimitLaw::FixedPoint { measure, a } => measure.atoms().iter().map(|&(x, _)| a * x).collect(),
            LimitLaw::AdjacencyGeneral { measure } => measure.atoms().iter().flat_map(|&(x, _)| [x, -x]).collect(),
        }
    }
}

/// Relative slack granted to the inequality constraints to absorb rounding.
const CONSTRAINT_SLACK: f64 = 1e-9;

pub(crate) fn check_im(z: Complex64) -> Result<()> {
    if z.im > 0.0 && z.im.is_finite() && z.re.is_finite() {
        Ok(())
    } else {
        Err(EslError::RealArgument(z))
    }
}

/// `Im f > 0` and `|f| <= 1/Im z`.
pub(crate) fn admissible(z: Complex64, f: Complex64) -> bool {
    f.im > 0.0 && f.norm() * z.im <= 1.0 + CONSTRAINT_SLACK
}

/// Verifies the Stieltjes constraints and the denominator bound for every
/// weight in `xis`.
pub fn certify(z: Complex64, f: Complex64, xis: &[f64]) -> Result<()> {
    if !f.is_finite() || !admissible(z, f) {
        return Err(EslError::BranchAmbiguity(z));
    }
    for &xi in xis {
        let bound = 2f64.max(4.0 * xi.abs() / z.im);
        let denom = (Complex64::new(1.0, 0.0) + xi * f).norm();
        if denom * bound * (1.0 + CONSTRAINT_SLACK) < 1.0 {
            return Err(EslError::BranchAmbiguity(z));
        }
    }
    Ok(())
}

/// Chooses the Stieltjes branch among the roots of a polynomial equation.
/// A uniquely admissible root is returned directly; otherwise the branch is
/// followed from `Re z + i eta_start`, where `f ~ -1/z`, down to `z`.
pub(crate) fn select_polynomial_branch(
    z: Complex64,
    opts: &SolverOptions,
    roots_at: impl Fn(Complex64) -> Vec<Complex64>,
) -> Result<(Complex64, SolvePath, String)> {
    let roots = roots_at(z);
    let admissible_roots: Vec<Complex64> = roots.iter().copied().filter(|&f| admissible(z, f)).collect();
    if admissible_roots.len() == 1 {
        return Ok((admissible_roots[0], SolvePath::Closed, "unique admissible root".into()));
    }
    let start = Complex64::new(z.re, opts.eta_start.max(z.im));
    let mut prev = -start.inv();
    let etas = opts.continuation_etas(z.im);
    for &eta in &etas {
        let zk = Complex64::new(z.re, eta);
        let rs = if eta == z.im { roots.clone() } else { roots_at(zk) };
        prev = rs
            .into_iter()
            .min_by(|a, b| (a - prev).norm().total_cmp(&(b - prev).norm()))
            .ok_or(EslError::BranchAmbiguity(z))?;
    }
    if !admissible(z, prev) {
        return Err(EslError::BranchAmbiguity(z));
    }
    let note = format!("{} admissible roots; branch tracked from Im z = {}", admissible_roots.len(), opts.eta_start);
    Ok((prev, SolvePath::Continuation { steps: etas.len() }, note))
}

/// Density `Im f / pi` at a real point from the roots of a real polynomial.
/// Complex roots come in conjugate pairs; when more than one pair exists or
/// the degree exceeds two, the physical pair is identified as the one
/// nearest to `reference`, a Stieltjes value slightly above the axis.
pub(crate) fn on_axis_density(coeffs: &[f64], reference: impl FnOnce() -> Result<Complex64>) -> Result<f64> {
    let c: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let roots = poly::roots(&c);
    let is_complex = |r: &Complex64| r.im.abs() > 1e-13 * r.norm().max(1.0);
    let pairs = roots.iter().filter(|r| is_complex(r) && r.im > 0.0).count();
    if pairs == 0 {
        return Ok(0.0);
    }
    if pairs == 1 && roots.len() <= 2 {
        let r = roots.iter().find(|r| r.im > 0.0).unwrap();
        return Ok(r.im / std::f64::consts::PI);
    }
    let f_ref = reference()?;
    let upper = |r: &Complex64| Complex64::new(r.re, r.im.abs());
    let nearest = roots.iter().min_by(|a, b| (upper(a) - f_ref).norm().total_cmp(&(upper(b) - f_ref).norm())).unwrap();
    Ok(if is_complex(nearest) { nearest.im.abs() / std::f64::consts::PI } else { 0.0 })
}

/// Imaginary part used for the reference solve of [`on_axis_density`].
pub(crate) fn reference_eta(lambda: f64) -> f64 {
    1e-7 * (1.0 + lambda.abs())
}

#[cfg(test)]
mod tests;
