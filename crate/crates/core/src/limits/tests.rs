use std::f64::consts::PI;

use num_complex::Complex64;

use super::*;

fn grid() -> Vec<Complex64> {
    let mut zs = Vec::new();
    for i in 0..20 {
        for j in 0..20 {
            let lambda = -5.0 + 10.0 * i as f64 / 19.0;
            let eta = 10f64.powf(-2.0 + 4.0 * j as f64 / 19.0);
            zs.push(Complex64::new(lambda, eta));
        }
    }
    zs
}

fn laws() -> Vec<LimitLaw> {
    vec![
        LimitLaw::MarchenkoPastur { b: 1.0, c1: 1.0 },
        LimitLaw::MarchenkoPastur { b: 0.0, c1: 2.0 },
        LimitLaw::ShiftedSemicircle { c1: 0.5, c2: 1.5 },
        LimitLaw::BlockLaplacian { c: 1.0 },
        LimitLaw::EffectiveMedium { c: 1.0 },
        LimitLaw::EffectiveMedium { c: 0.4 },
        LimitLaw::FixedPoint { measure: WeightMeasure::new(vec![(1.0, 0.7), (-0.5, -0.2)]).unwrap(), a: 1.0 },
        LimitLaw::FixedPoint { measure: WeightMeasure::new(vec![(0.2236, 2.236), (-0.2236, -2.236)]).unwrap(), a: 1.0 },
        LimitLaw::AdjacencyGeneral { measure: WeightMeasure::new(vec![(1.0, 0.3), (-0.5, -0.4)]).unwrap() },
    ]
}

#[test]
fn solvers_are_certified_on_the_grid() {
    let opts = SolverOptions::default();
    for law in laws() {
        for z in grid() {
            let r = law.stieltjes(z, &opts).unwrap_or_else(|e| panic!("{law} at {z}: {e}"));
            assert!(r.residual <= 1e-10, "{law} at {z}: residual {}", r.residual);
            certify(z, r.f, &law.bound_weights()).unwrap();
        }
    }
}

#[test]
fn on_axis_density_agrees_with_inversion() {
    let opts = SolverOptions::default();
    for law in laws() {
        for &lambda in &[-1.3, -0.4, 0.35, 1.1, 2.2] {
            let direct = law.density(lambda, &opts).unwrap();
            let inverted = density_from_stieltjes(&law, lambda, &[1e-4, 5e-5, 2.5e-5], &opts).unwrap();
            assert!((direct - inverted).abs() < 1e-3 * (1.0 + direct), "{law} at {lambda}: {direct} vs {inverted}");
        }
    }
}

#[test]
fn total_mass_is_one() {
    let opts = SolverOptions::default();
    for law in laws() {
        let s = law_support(&law, &opts).unwrap();
        assert!((s.total_mass() - 1.0).abs() < 1e-5, "{law}: {}", s.total_mass());
    }
}

#[test]
fn effective_medium_normalization_just_above_the_axis() {
    let im = |x: f64| effective_medium_stieltjes(1.0, Complex64::new(x, 1e-6)).unwrap().f.im / PI;
    // the density is singular at the origin, so each half is integrated separately
    let left = quad::tanh_sinh(im, -4.0, 0.0, 1e-5).unwrap().value;
    let right = quad::tanh_sinh(im, 0.0, 4.0, 1e-5).unwrap().value;
    assert!((left + right - 1.0).abs() < 1e-3, "{}", left + right);
}

#[test]
fn atoms_of_degenerate_laws() {
    assert_eq!(LimitLaw::EffectiveMedium { c: 0.0 }.atoms(), vec![Atom { location: 0.0, weight: 1.0 }]);
    assert_eq!(LimitLaw::BlockLaplacian { c: 1.0 }.atoms(), vec![Atom { location: 0.0, weight: 0.5 }]);
    assert!(LimitLaw::MarchenkoPastur { b: 1.0, c1: 1.0 }.atoms().is_empty());
    let adj = LimitLaw::AdjacencyGeneral { measure: WeightMeasure::point(1.0, 0.25).unwrap() };
    assert_eq!(adj.atoms(), vec![Atom { location: 0.0, weight: 0.5 }]);
}

#[test]
fn display_names() {
    assert_eq!(LimitLaw::BlockLaplacian { c: 1.0 }.to_string(), "BlockLaplacian(c=1)");
    assert_eq!(LimitLaw::semicircle().to_string(), "ShiftedSemicircle(c1=0,c2=1)");
}
