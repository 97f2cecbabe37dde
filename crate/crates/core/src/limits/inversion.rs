//! Recovering a density from the Stieltjes transform slightly above the axis.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{LimitLaw, SolverOptions};
use crate::error::{EslError, Result};

pub const DEFAULT_ETA_SCHEDULE: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// `(1/pi) Im f(lambda + i eta)` extrapolated to `eta = 0` through all points
/// of the schedule (Neville's scheme), clamped at zero. Atom contributions
/// `w / (x - z)` are removed first so that only the continuous part remains.
pub fn density_from_stieltjes(law: &LimitLaw, lambda: f64, schedule: &[f64], opts: &SolverOptions) -> Result<f64> {
    if schedule.len() < 2 {
        return Err(EslError::InvalidParameter("the eta schedule needs at least two values".into()));
    }
    if schedule.iter().any(|e| !(*e > 0.0 && e.is_finite())) || schedule.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(EslError::InvalidParameter("the eta schedule must be positive and strictly decreasing".into()));
    }
    let atoms = law.atoms();
    let mut values = Vec::with_capacity(schedule.len());
    for &eta in schedule {
        let z = Complex64::new(lambda, eta);
        let mut f = law.stieltjes(z, opts)?.f;
        for a in &atoms {
            f -= a.weight / (Complex64::new(a.location, 0.0) - z);
        }
        values.push(f.im / PI);
    }
    // Neville tableau evaluated at eta = 0
    let x = schedule;
    let mut p = values;
    for level in 1..x.len() {
        for i in 0..x.len() - level {
            let j = i + level;
            p[i] = (x[j] * p[i] - x[i] * p[i + 1]) / (x[j] - x[i]);
        }
    }
    Ok(p[0].max(0.0))
}
