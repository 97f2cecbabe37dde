//! Marchenko-Pastur, block Laplacian and shifted semicircle laws.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{certify, check_im, select_polynomial_branch, Atom, SolvePath, SolveReport, SolverOptions};
use crate::error::{EslError, Result};
use crate::limits::poly;

/// Density value that distinguishes a purely atomic law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityValue {
    Density(f64),
    /// The law is a single point mass; no density exists.
    Atomic {
        location: f64,
        weight: f64,
    },
}

impl DensityValue {
    /// Density of the absolutely continuous part (0 for an atomic law).
    pub fn continuous(self) -> f64 {
        match self {
            DensityValue::Density(v) => v,
            DensityValue::Atomic { .. } => 0.0,
        }
    }
}

pub(crate) fn mp_atoms(b: f64, c1: f64) -> Vec<Atom> {
    if b == 0.0 {
        return vec![Atom { location: c1, weight: 1.0 }];
    }
    let w = 1.0 - c1 / b;
    if w > 1e-15 {
        vec![Atom { location: 0.0, weight: w }]
    } else {
        Vec::new()
    }
}

/// Stieltjes transform of the Marchenko-Pastur law, the root of
/// `b z f^2 + (z + b - c1) f + 1 = 0` with `Im f > 0`.
pub fn mp_stieltjes(b: f64, c1: f64, z: Complex64) -> Result<SolveReport> {
    if !(b >= 0.0 && b.is_finite() && c1 > 0.0 && c1.is_finite()) {
        return Err(EslError::InvalidParameter(format!("need b >= 0 and c1 > 0, got b={b}, c1={c1}")));
    }
    mp_stieltjes_opts(b, c1, z, &SolverOptions::default())
}

fn mp_residual(b: f64, c1: f64, z: Complex64, f: Complex64) -> f64 {
    poly::scaled_residual(&[Complex64::new(1.0, 0.0), z + b - c1, b * z], f)
}

pub(crate) fn mp_stieltjes_opts(b: f64, c1: f64, z: Complex64, opts: &SolverOptions) -> Result<SolveReport> {
    check_im(z)?;
    let (f, path, branch_note) = if b == 0.0 {
        ((Complex64::new(c1, 0.0) - z).inv(), SolvePath::Closed, "point mass".to_string())
    } else {
        select_polynomial_branch(z, opts, |z| {
            poly::quadratic_roots(b * z, z + b - c1, Complex64::new(1.0, 0.0)).to_vec()
        })?
    };
    finish(z, f, mp_residual(b, c1, z, f), path, branch_note, &[b], opts.poly_tol)
}

fn finish(
    z: Complex64,
    f: Complex64,
    residual: f64,
    path: SolvePath,
    branch_note: String,
    xis: &[f64],
    tol: f64,
) -> Result<SolveReport> {
    if !(residual <= tol) {
        return Err(EslError::NoConvergence { z, iterations: 0, residual });
    }
    certify(z, f, xis)?;
    Ok(SolveReport { f, residual, iterations: 0, branch_note, path, conjectural: false })
}

/// Marchenko-Pastur density `sqrt((c+ - l)(l - c-)) / (2 pi b l)` with
/// `c+- = (sqrt b +- sqrt c1)^2`; atomic when `b = 0` or `c1 = 0`.
pub fn mp_density(b: f64, c1: f64, lambda: f64) -> DensityValue {
    if b == 0.0 {
        return DensityValue::Atomic { location: c1, weight: 1.0 };
    }
    if c1 == 0.0 {
        return DensityValue::Atomic { location: 0.0, weight: 1.0 };
    }
    if lambda <= 0.0 {
        return DensityValue::Density(0.0);
    }
    let (lo, hi) = mp_edges(b, c1);
    let prod = (hi - lambda) * (lambda - lo);
    DensityValue::Density(if prod > 0.0 { prod.sqrt() / (2.0 * PI * b * lambda) } else { 0.0 })
}

/// Support edges `(c-, c+)` of the continuous part.
pub fn mp_edges(b: f64, c1: f64) -> (f64, f64) {
    let (sb, sc) = (b.sqrt(), c1.sqrt());
    ((sb - sc).powi(2), (sb + sc).powi(2))
}

/// Density of the block Laplacian law, the Marchenko-Pastur law with `b = 2`.
pub fn block_laplacian_density(c: f64, lambda: f64) -> DensityValue {
    mp_density(2.0, c, lambda)
}

/// `sqrt(4 c2 - (l - c1)^2) / (2 pi c2)` on `[c1 - 2 sqrt c2, c1 + 2 sqrt c2]`.
pub fn shifted_semicircle_density(c1: f64, c2: f64, lambda: f64) -> f64 {
    let v = 4.0 * c2 - (lambda - c1).powi(2);
    if v > 0.0 {
        v.sqrt() / (2.0 * PI * c2)
    } else {
        0.0
    }
}

pub fn shifted_semicircle_edges(c1: f64, c2: f64) -> (f64, f64) {
    let r = 2.0 * c2.sqrt();
    (c1 - r, c1 + r)
}

/// Root of `c2 f^2 + (z - c1) f + 1 = 0` with `Im f > 0`.
pub fn shifted_semicircle_stieltjes(c1: f64, c2: f64, z: Complex64) -> Result<SolveReport> {
    if !(c1.is_finite() && c2 > 0.0 && c2.is_finite()) {
        return Err(EslError::InvalidParameter(format!("need finite c1 and c2 > 0, got c1={c1}, c2={c2}")));
    }
    ss_stieltjes_opts(c1, c2, z, &SolverOptions::default())
}

pub(crate) fn ss_stieltjes_opts(c1: f64, c2: f64, z: Complex64, opts: &SolverOptions) -> Result<SolveReport> {
    check_im(z)?;
    let (f, path, note) = select_polynomial_branch(z, opts, |z| {
        poly::quadratic_roots(Complex64::new(c2, 0.0), z - c1, Complex64::new(1.0, 0.0)).to_vec()
    })?;
    let residual = poly::scaled_residual(&[Complex64::new(1.0, 0.0), z - c1, Complex64::new(c2, 0.0)], f);
    finish(z, f, residual, path, note, &[], opts.poly_tol)
}
