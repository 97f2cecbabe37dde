//! The effective medium law, defined by the cubic
//! `z f^3 + (1 - c) f^2 - z f - 1 = 0`.

use num_complex::Complex64;

use super::{
    certify, check_im, on_axis_density, reference_eta, select_polynomial_branch, SolvePath, SolveReport, SolverOptions,
};
use crate::error::{EslError, Result};
use crate::limits::poly;

fn cubic(c: f64, z: Complex64) -> [Complex64; 4] {
    [Complex64::new(-1.0, 0.0), -z, Complex64::new(1.0 - c, 0.0), z]
}

/// Stieltjes transform of the effective medium law with parameter `c >= 0`.
pub fn effective_medium_stieltjes(c: f64, z: Complex64) -> Result<SolveReport> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(EslError::InvalidParameter(format!("c must be finite and >= 0, got {c}")));
    }
    em_stieltjes_opts(c, z, &SolverOptions::default())
}

pub(crate) fn em_stieltjes_opts(c: f64, z: Complex64, opts: &SolverOptions) -> Result<SolveReport> {
    check_im(z)?;
    // at c = 0 the cubic factors as (f^2 - 1)(z f + 1)
    let (f, path, branch_note) = if c == 0.0 {
        (-z.inv(), SolvePath::Closed, "factored cubic, f = -1/z".to_string())
    } else {
        select_polynomial_branch(z, opts, |z| poly::roots(&cubic(c, z)))?
    };
    let residual = poly::scaled_residual(&cubic(c, z), f);
    if !(residual <= opts.poly_tol) {
        return Err(EslError::NoConvergence { z, iterations: 0, residual });
    }
    certify(z, f, &[1.0, -1.0])?;
    Ok(SolveReport { f, residual, iterations: 0, branch_note, path, conjectural: false })
}

pub(crate) fn em_density(c: f64, lambda: f64, opts: &SolverOptions) -> Result<f64> {
    if c == 0.0 || lambda == 0.0 {
        return Ok(0.0);
    }
    on_axis_density(&[-1.0, -lambda, 1.0 - c, lambda], || {
        em_stieltjes_opts(c, Complex64::new(lambda, reference_eta(lambda)), opts).map(|r| r.f)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameter_is_point_mass_at_origin() {
        for z in [Complex64::i(), Complex64::new(-2.0, 0.01), Complex64::new(3.0, 50.0)] {
            let r = effective_medium_stieltjes(0.0, z).unwrap();
            assert_eq!(r.f, -z.inv());
        }
    }

    #[test]
    fn large_eta_asymptotics() {
        let z = Complex64::new(0.0, 10.0);
        let r = effective_medium_stieltjes(1.0, z).unwrap();
        assert!((r.f + z.inv()).norm() <= 0.05 * z.inv().norm());
    }

    #[test]
    fn residual_is_certified_across_the_plane() {
        for &c in &[0.3, 1.0, 2.5] {
            for i in 0..30 {
                let z = Complex64::new(-4.0 + 0.27 * i as f64, 0.01 + 0.1 * (i % 5) as f64);
                let r = effective_medium_stieltjes(c, z).unwrap();
                assert!(r.residual <= 1e-12 && r.f.im > 0.0);
            }
        }
    }
}
