//! Iterative solvers for the general equations
//! `z f = -1 + a f sum_k w_k / (1 + a xi_k f)` and
//! `z f = -1 - 2 f^2 sum_k w_k xi_k / (1 - xi_k^2 f^2)`.

use num_complex::Complex64;

use super::{admissible, certify, check_im, on_axis_density, reference_eta, SolvePath, SolveReport, SolverOptions};
use crate::error::{EslError, Result};
use crate::measure::WeightMeasure;

/// Denominators below this modulus are reported as singular.
const SINGULAR_DENOMINATOR: f64 = 1e-14;
/// Damping below which a step is taken even if it raises the residual.
const MIN_THETA: f64 = 1e-6;

trait Equation {
    /// `z f + 1 - rhs(f)`.
    fn residual(&self, z: Complex64, f: Complex64) -> Result<Complex64>;
    fn derivative(&self, z: Complex64, f: Complex64) -> Result<Complex64>;
    /// The undamped map `f -> (-1 + rhs(f)) / z`.
    fn map(&self, z: Complex64, f: Complex64) -> Result<Complex64>;
}

struct General<'a> {
    measure: &'a WeightMeasure,
    a: f64,
}

impl General<'_> {
    /// `sum w / (1 + a xi f)` and `sum w / (1 + a xi f)^2`.
    fn sums(&self, z: Complex64, f: Complex64) -> Result<(Complex64, Complex64)> {
        let mut s1 = Complex64::new(0.0, 0.0);
        let mut s2 = Complex64::new(0.0, 0.0);
        for &(xi, w) in self.measure.atoms() {
            let d = 1.0 + self.a * xi * f;
            let modulus = d.norm();
            if modulus < SINGULAR_DENOMINATOR {
                return Err(EslError::Singularity { z, modulus });
            }
            let inv = d.inv();
            s1 += w * inv;
            s2 += w * inv * inv;
        }
        Ok((s1, s2))
    }
}

impl Equation for General<'_> {
    fn residual(&self, z: Complex64, f: Complex64) -> Result<Complex64> {
        let (s1, _) = self.sums(z, f)?;
        Ok(z * f + 1.0 - self.a * f * s1)
    }

    fn derivative(&self, z: Complex64, f: Complex64) -> Result<Complex64> {
        let (_, s2) = self.sums(z, f)?;
        Ok(z - self.a * s2)
    }

    fn map(&self, z: Complex64, f: Complex64) -> Result<Complex64> {
        let (s1, _) = self.sums(z, f)?;
        Ok((-1.0 + self.a * f * s1) / z)
    }
}

struct Adjacency<'a> {
    measure: &'a WeightMeasure,
}

impl Adjacency<'_> {
    /// `sum w xi / (1 - xi^2 f^2)` and `sum w xi / (1 - xi^2 f^2)^2`.
    fn sums(&self, z: Complex64, f: Complex64) -> Result<(Complex64, Complex64)> {
        let mut s1 = Complex64::new(0.0, 0.0);
        let mut s2 = Complex64::new(0.0, 0.0);
        let f2 = f * f;
        for &(xi, w) in self.measure.atoms() {
            let d = 1.0 - xi * xi * f2;
            let modulus = d.norm();
            if modulus < SINGULAR_DENOMINATOR {
                return Err(EslError::Singularity { z, modulus });
            }
            let inv = d.inv();
            s1 += w * xi * inv;
            s2 += w * xi * inv * inv;
        }
        Ok((s1, s2))
    }
}

impl Equation for Adjacency<'_> {
    fn residual(&self, z: Complex64, f: Complex64) -> Result<Complex64> {
        let (s1, _) = self.sums(z, f)?;
        Ok(z * f + 1.0 + 2.0 * f * f * s1)
    }

    fn derivative(&self, z: Complex64, f: Complex64) -> Result<Complex64> {
        let (_, s2) = self.sums(z, f)?;
        Ok(z + 4.0 * f * s2)
    }

    fn map(&self, z: Complex64, f: Complex64) -> Result<Complex64> {
        let (s1, _) = self.sums(z, f)?;
        Ok((-1.0 - 2.0 * f * f * s1) / z)
    }
}

/// Damped fixed-point iteration at a single `z`. A Newton step is taken
/// instead whenever it lowers the residual and stays admissible.
fn iterate(eq: &dyn Equation, z: Complex64, f0: Complex64, opts: &SolverOptions) -> Result<(Complex64, f64, usize)> {
    let mut f = f0;
    let mut r = eq.residual(z, f)?.norm();
    let mut theta = opts.theta;
    let mut iterations = 0;
    while !(r <= opts.tol) {
        if iterations >= opts.max_iter {
            return Err(EslError::NoConvergence { z, iterations, residual: r });
        }
        iterations += 1;
        if let (Ok(res), Ok(d)) = (eq.residual(z, f), eq.derivative(z, f)) {
            let cand = f - res / d;
            if cand.is_finite() && admissible(z, cand) {
                if let Ok(rc) = eq.residual(z, cand) {
                    if rc.norm() < r {
                        f = cand;
                        r = rc.norm();
                        continue;
                    }
                }
            }
        }
        let target = eq.map(z, f)?;
        loop {
            let cand = (1.0 - theta) * f + theta * target;
            let rc = eq.residual(z, cand)?.norm();
            if rc < r || theta < MIN_THETA {
                f = cand;
                r = rc;
                break;
            }
            theta *= 0.5;
        }
    }
    Ok((f, r, iterations))
}

fn solve(
    eq: &dyn Equation,
    z: Complex64,
    opts: &SolverOptions,
    xis: &[f64],
) -> Result<(Complex64, f64, usize, SolvePath)> {
    check_im(z)?;
    opts.validate()?;
    let (f, residual, iterations, path) = if z.im >= opts.eta_start {
        let (f, r, it) = iterate(eq, z, -z.inv(), opts)?;
        (f, r, it, SolvePath::Direct)
    } else {
        let etas = opts.continuation_etas(z.im);
        let mut f = -Complex64::new(z.re, etas[0]).inv();
        let (mut total, mut r, mut steps) = (0, f64::NAN, 0);
        let mut prev_eta = f64::INFINITY;
        for &eta in &etas {
            let (fk, rk, it, n) = step(eq, z.re, prev_eta, f, eta, opts, xis, 0)?;
            f = fk;
            r = rk;
            total += it;
            steps += n;
            prev_eta = eta;
        }
        (f, r, total, SolvePath::Continuation { steps })
    };
    certify(z, f, xis)?;
    Ok((f, residual, iterations, path))
}

/// Halvings of a continuation step before the branch is declared lost.
const MAX_STEP_SPLITS: u32 = 24;

/// Moves the branch from `re + i hi` (value `f`) to `re + i lo`. A step is
/// accepted when the result is certified and moved no further than
/// `|f'| <= 1 / Im z^2` allows; otherwise it is split geometrically.
#[allow(clippy::too_many_arguments)]
fn step(
    eq: &dyn Equation,
    re: f64,
    hi: f64,
    f: Complex64,
    lo: f64,
    opts: &SolverOptions,
    xis: &[f64],
    depth: u32,
) -> Result<(Complex64, f64, usize, usize)> {
    let z = Complex64::new(re, lo);
    let attempt = iterate(eq, z, f, opts).and_then(|(fk, r, it)| {
        certify(z, fk, xis)?;
        let reach = 1.0 / lo - 1.0 / hi;
        if (fk - f).norm() > reach * (1.0 + 1e-6) + 1e-12 {
            return Err(EslError::BranchAmbiguity(z));
        }
        Ok((fk, r, it))
    });
    match attempt {
        Ok((fk, r, it)) => Ok((fk, r, it, 1)),
        Err(e) if depth >= MAX_STEP_SPLITS || !hi.is_finite() => Err(e),
        Err(_) => {
            let mid = (hi * lo).sqrt();
            let (fm, _, it1, n1) = step(eq, re, hi, f, mid, opts, xis, depth + 1)?;
            let (fk, r, it2, n2) = step(eq, re, mid, fm, lo, opts, xis, depth + 1)?;
            Ok((fk, r, it1 + it2, n1 + n2))
        }
    }
}

/// Solves `z f = -1 + a f sum_k w_k / (1 + a xi_k f)` for the Stieltjes
/// branch.
pub fn fixed_point_stieltjes(
    measure: &WeightMeasure,
    a: f64,
    z: Complex64,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(EslError::InvalidParameter(format!("a must be finite and > 0, got {a}")));
    }
    let xis: Vec<f64> = measure.atoms().iter().map(|&(x, _)| a * x).collect();
    let (f, residual, iterations, path) = solve(&General { measure, a }, z, opts, &xis)?;
    Ok(SolveReport {
        f,
        residual,
        iterations,
        branch_note: "damped fixed-point iteration from -1/z".into(),
        path,
        conjectural: false,
    })
}

/// Solves `z f = -1 - 2 f^2 sum_k w_k xi_k / (1 - xi_k^2 f^2)`. This equation
/// for general weights is conjectured, so every report is flagged.
pub fn adjacency_general_stieltjes(measure: &WeightMeasure, z: Complex64, opts: &SolverOptions) -> Result<SolveReport> {
    let xis: Vec<f64> = measure.atoms().iter().flat_map(|&(x, _)| [x, -x]).collect();
    let (f, residual, iterations, path) = solve(&Adjacency { measure }, z, opts, &xis)?;
    Ok(SolveReport {
        f,
        residual,
        iterations,
        branch_note: "conjectural equation; damped fixed-point iteration from -1/z".into(),
        path,
        conjectural: true,
    })
}

fn real_poly(coeffs: &[f64]) -> Vec<Complex64> {
    coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

fn to_real(p: &[Complex64]) -> Vec<f64> {
    p.iter().map(|c| c.re).collect()
}

/// `(l f + 1) prod_k (1 + a xi_k f) - a f sum_k w_k prod_{j != k} (1 + a xi_j f)`.
fn general_polynomial(measure: &WeightMeasure, a: f64, lambda: f64) -> Vec<f64> {
    use super::poly::{add, mul};
    let atoms = measure.atoms();
    let factor = |k: usize| real_poly(&[1.0, a * atoms[k].0]);
    let mut prod_all = real_poly(&[1.0]);
    for k in 0..atoms.len() {
        prod_all = mul(&prod_all, &factor(k));
    }
    let mut p = mul(&real_poly(&[1.0, lambda]), &prod_all);
    for (k, &(_, w)) in atoms.iter().enumerate() {
        let mut term = real_poly(&[0.0, -a * w]);
        for j in (0..atoms.len()).filter(|&j| j != k) {
            term = mul(&term, &factor(j));
        }
        p = add(&p, &term);
    }
    to_real(&p)
}

/// `(l f + 1) prod_q (1 - q f^2) + 2 f^2 sum_q s_q prod_{p != q} (1 - p f^2)`,
/// where atoms with equal `xi^2 = q` are merged into `s_q = sum w xi`.
fn adjacency_polynomial(measure: &WeightMeasure, lambda: f64) -> Vec<f64> {
    use super::poly::{add, mul};
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for &(xi, w) in measure.atoms() {
        let q = xi * xi;
        match groups.iter_mut().find(|g| g.0 == q) {
            Some(g) => g.1 += w * xi,
            None => groups.push((q, w * xi)),
        }
    }
    let factor = |k: usize| real_poly(&[1.0, 0.0, -groups[k].0]);
    let mut prod_all = real_poly(&[1.0]);
    for k in 0..groups.len() {
        prod_all = mul(&prod_all, &factor(k));
    }
    let mut p = mul(&real_poly(&[1.0, lambda]), &prod_all);
    for (k, &(_, s)) in groups.iter().enumerate() {
        let mut term = real_poly(&[0.0, 0.0, 2.0 * s]);
        for j in (0..groups.len()).filter(|&j| j != k) {
            term = mul(&term, &factor(j));
        }
        p = add(&p, &term);
    }
    to_real(&p)
}

pub(crate) fn fixed_point_density(measure: &WeightMeasure, a: f64, lambda: f64, opts: &SolverOptions) -> Result<f64> {
    if measure.is_empty() {
        return Ok(0.0);
    }
    on_axis_density(&general_polynomial(measure, a, lambda), || {
        fixed_point_stieltjes(measure, a, Complex64::new(lambda, reference_eta(lambda)), opts).map(|r| r.f)
    })
}

pub(crate) fn adjacency_density(measure: &WeightMeasure, lambda: f64, opts: &SolverOptions) -> Result<f64> {
    if measure.is_empty() {
        return Ok(0.0);
    }
    on_axis_density(&adjacency_polynomial(measure, lambda), || {
        adjacency_general_stieltjes(measure, Complex64::new(lambda, reference_eta(lambda)), opts).map(|r| r.f)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::{effective_medium_stieltjes, mp_stieltjes, shifted_semicircle_stieltjes};

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn one_atom_reduces_to_marchenko_pastur() {
        let m = WeightMeasure::point(1.0, 1.0).unwrap();
        let r = fixed_point_stieltjes(&m, 1.0, Complex64::i(), &opts()).unwrap();
        let mp = mp_stieltjes(1.0, 1.0, Complex64::i()).unwrap();
        assert!((r.f - mp.f).norm() < 1e-10);
        assert!(!r.conjectural);
    }

    #[test]
    fn small_symmetric_measure_is_near_shifted_semicircle() {
        let m = WeightMeasure::new(vec![(0.1, 0.5), (-0.1, -0.5)]).unwrap();
        let r = fixed_point_stieltjes(&m, 1.0, Complex64::i(), &opts()).unwrap();
        let ss = shifted_semicircle_stieltjes(0.0, 0.1, Complex64::i()).unwrap();
        assert!((r.f - ss.f).norm() < 2e-2);
    }

    #[test]
    fn large_eta_asymptotics() {
        let m = WeightMeasure::new(vec![(0.5, 2.0), (-1.0, -1.0), (3.0, 0.2)]).unwrap();
        let z = Complex64::new(0.0, 1e4);
        let r = fixed_point_stieltjes(&m, 1.0, z, &opts()).unwrap();
        assert!((z * r.f + 1.0).norm() <= 1e-3 * (1.0 + m.total_mass().abs()));
        assert_eq!(r.path, SolvePath::Direct);
        let r = adjacency_general_stieltjes(&m, z, &opts()).unwrap();
        assert!((z * r.f + 1.0).norm() <= 1e-3);
        assert!(r.conjectural);
    }

    #[test]
    fn adjacency_one_atom_matches_effective_medium() {
        let m = WeightMeasure::point(1.0, 0.5).unwrap();
        for z in [Complex64::i(), Complex64::new(0.5, 0.05), Complex64::new(-2.0, 0.3)] {
            let r = adjacency_general_stieltjes(&m, z, &opts()).unwrap();
            let em = effective_medium_stieltjes(1.0, z).unwrap();
            assert!((r.f - em.f).norm() < 1e-10, "{z}: {} vs {}", r.f, em.f);
        }
    }

    #[test]
    fn adjacency_small_symmetric_measure_is_near_semicircle() {
        // 4 w eps = 1 gives f^2 + z f + 1 = 0 in the eps -> 0 limit
        let eps = 1e-3;
        let w = 0.25 / eps;
        let m = WeightMeasure::new(vec![(eps, w), (-eps, -w)]).unwrap();
        let z = Complex64::new(0.3, 0.5);
        let r = adjacency_general_stieltjes(&m, z, &opts()).unwrap();
        let sc = shifted_semicircle_stieltjes(0.0, 1.0, z).unwrap();
        assert!((r.f - sc.f).norm() < 1e-4);
    }

    #[test]
    fn continuation_is_recorded() {
        let m = WeightMeasure::point(1.0, 1.0).unwrap();
        let r = fixed_point_stieltjes(&m, 1.0, Complex64::new(2.0, 0.01), &opts()).unwrap();
        assert!(matches!(r.path, SolvePath::Continuation { steps } if steps > 5));
        assert!(r.residual <= 1e-10);
    }

    #[test]
    fn iteration_cap_reports_last_residual() {
        let m = WeightMeasure::point(1.0, 1.0).unwrap();
        let tight = SolverOptions { tol: 1e-300, max_iter: 3, ..opts() };
        match fixed_point_stieltjes(&m, 1.0, Complex64::new(1.0, 20.0), &tight) {
            Err(EslError::NoConvergence { iterations, residual, .. }) => {
                assert_eq!(iterations, 3);
                assert!(residual.is_finite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn polynomials_vanish_at_the_stieltjes_value() {
        let m = WeightMeasure::new(vec![(0.5, 2.0), (-1.0, -1.0)]).unwrap();
        let lambda = 0.7;
        let p = general_polynomial(&m, 1.3, lambda);
        let f = Complex64::new(0.2, 0.9);
        let direct = (lambda * f + 1.0
            - 1.3 * f * m.atoms().iter().map(|&(x, w)| w / (1.0 + 1.3 * x * f)).sum::<Complex64>())
            * m.atoms().iter().map(|&(x, _)| 1.0 + 1.3 * x * f).product::<Complex64>();
        let via_poly = crate::limits::poly::eval(&real_poly(&p), f);
        assert!((direct - via_poly).norm() < 1e-13);
        let p = adjacency_polynomial(&m, lambda);
        let direct = (lambda * f
            + 1.0
            + 2.0 * f * f * m.atoms().iter().map(|&(x, w)| w * x / (1.0 - x * x * f * f)).sum::<Complex64>())
            * m.atoms().iter().map(|&(x, _)| 1.0 - x * x * f * f).product::<Complex64>();
        assert!((direct - crate::limits::poly::eval(&real_poly(&p), f)).norm() < 1e-13);
    }
}
