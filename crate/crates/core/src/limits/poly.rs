//! Polynomial root finding in complex arithmetic.

use num_complex::Complex64;

const MAX_ABERTH_ITERS: usize = 500;

/// Evaluates `sum c_k x^k` and its derivative (coefficients in ascending order).
pub fn eval_with_derivative(coeffs: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

pub fn eval(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

/// `|p(x)| / sum |c_k| |x|^k`, the relative backward error of `x` as a
/// root. Never larger than `|p(x)|` when the constant term has modulus 1.
pub fn scaled_residual(coeffs: &[Complex64], x: Complex64) -> f64 {
    let r = x.norm();
    let scale = coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm());
    let value = eval(coeffs, x).norm();
    if scale > 0.0 {
        value / scale
    } else {
        value
    }
}

/// Product of two polynomials in ascending coefficient order.
pub fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Sum of two polynomials in ascending coefficient order.
pub fn add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

/// Roots of `a x^2 + b x + c` with `a != 0`, avoiding cancellation.
pub fn quadratic_roots(a: Complex64, b: Complex64, c: Complex64) -> [Complex64; 2] {
    let sq = (b * b - 4.0 * a * c).sqrt();
    let s = if (b.conj() * sq).re >= 0.0 { sq } else { -sq };
    let q = -0.5 * (b + s);
    if q.norm() == 0.0 {
        return [Complex64::new(0.0, 0.0); 2];
    }
    [q / a, c / q]
}

/// All roots of a polynomial given in ascending coefficient order. Leading
/// zero coefficients are dropped. Uses simultaneous Aberth-Ehrlich iteration
/// followed by Newton polishing of every root.
pub fn roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    let deg = c.len().saturating_sub(1);
    match deg {
        0 => return Vec::new(),
        1 => return vec![-c[0] / c[1]],
        2 => {
            let r = quadratic_roots(c[2], c[1], c[0]);
            return r.iter().map(|&x| polish(&c, x)).collect();
        }
        _ => {}
    }
    // roots at the origin are split off exactly
    let zeros = c.iter().take_while(|x| x.norm() == 0.0).count();
    let reduced = &c[zeros..];
    let mut out = vec![Complex64::new(0.0, 0.0); zeros];
    out.extend(aberth(reduced).into_iter().map(|x| polish(reduced, x)));
    out
}

fn aberth(c: &[Complex64]) -> Vec<Complex64> {
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    if deg == 1 {
        return vec![-c[0] / c[1]];
    }
    let lead = c[deg].norm();
    // Fujiwara bound on the root moduli
    let upper = (0..deg)
        .map(|k| {
            let ratio = c[k].norm() / lead;
            let ratio = if k == 0 { ratio / 2.0 } else { ratio };
            ratio.powf(1.0 / (deg - k) as f64)
        })
        .fold(0.0f64, f64::max)
        * 2.0;
    let lower = {
        let c0 = c[0].norm();
        let low = (1..=deg)
            .filter(|&k| c[k].norm() > 0.0)
            .map(|k| (c0 / c[k].norm()).powf(1.0 / k as f64))
            .fold(f64::INFINITY, f64::min);
        if low.is_finite() {
            low * 0.5
        } else {
            0.0
        }
    };
    let radius = if lower > 0.0 { (lower * upper).sqrt() } else { upper.max(1e-300) };
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64 + 0.4))
        .collect();
    for _ in 0..MAX_ABERTH_ITERS {
        let mut max_rel = 0.0f64;
        for k in 0..deg {
            let (p, dp) = eval_with_derivative(c, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let sum: Complex64 = (0..deg).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
            let corr = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if corr.is_finite() {
                z[k] -= corr;
                max_rel = max_rel.max(corr.norm() / z[k].norm().max(1e-300));
            }
        }
        if max_rel < 1e-15 {
            break;
        }
    }
    z
}

/// A few Newton steps that are kept only while they reduce `|p|`.
fn polish(c: &[Complex64], mut x: Complex64) -> Complex64 {
    let mut px = eval(c, x).norm();
    for _ in 0..4 {
        let (p, dp) = eval_with_derivative(c, x);
        if dp.norm() == 0.0 {
            break;
        }
        let cand = x - p / dp;
        let pc = eval(c, cand).norm();
        if !(pc < px) {
            break;
        }
        x = cand;
        px = pc;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn poly_from_roots(rs: &[Complex64]) -> Vec<Complex64> {
        rs.iter().fold(vec![c(1.0, 0.0)], |acc, &r| mul(&acc, &[-r, c(1.0, 0.0)]))
    }

    fn assert_same_roots(mut got: Vec<Complex64>, mut want: Vec<Complex64>, tol: f64) {
        assert_eq!(got.len(), want.len());
        for w in want.drain(..) {
            let (i, d) =
                got.iter().enumerate().map(|(i, g)| (i, (g - w).norm())).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
            assert!(d < tol, "root {w} missed by {d}");
            got.remove(i);
        }
    }

    #[test]
    fn quadratic_formula_is_stable() {
        let r = quadratic_roots(c(1.0, 0.0), c(1e8, 0.0), c(1.0, 0.0));
        let small = r.iter().map(|x| x.norm()).fold(f64::INFINITY, f64::min);
        assert!((small - 1e-8).abs() < 1e-22);
    }

    #[test]
    fn recovers_known_roots() {
        let rs = vec![c(1.0, 0.0), c(-2.0, 0.5), c(0.3, -4.0), c(1e-3, 0.0), c(7.0, 7.0)];
        assert_same_roots(roots(&poly_from_roots(&rs)), rs, 1e-12);
    }

    #[test]
    fn handles_zero_and_repeated_roots() {
        let rs = vec![c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0), c(-1.0, 1.0)];
        assert_same_roots(roots(&poly_from_roots(&rs)), rs, 1e-12);
        let rs = vec![c(1.0, 0.0), c(1.0, 0.0), c(-3.0, 0.0)];
        assert_same_roots(roots(&poly_from_roots(&rs)), rs, 1e-6);
    }

    #[test]
    fn drops_vanishing_leading_terms() {
        let p = vec![c(-2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        assert_eq!(roots(&p), vec![c(2.0, 0.0)]);
    }

    #[test]
    fn cubic_with_complex_coefficients() {
        // z f^3 + f^2 - z f - 1 = (f^2 - 1)(z f + 1)
        let z = c(0.7, 0.2);
        let p = vec![c(-1.0, 0.0), -z, c(1.0, 0.0), z];
        assert_same_roots(roots(&p), vec![c(1.0, 0.0), c(-1.0, 0.0), -z.inv()], 1e-13);
    }
}
