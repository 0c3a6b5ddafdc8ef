use serde::Serialize;

use super::{StrategyCurve, TypeToTypeMap};
use crate::numeric::{lagrange_derivative, lagrange_value};

const ODE_TOL: f64 = 1e-6;
const BOUNDARY_TOL: f64 = 1e-6;

/// Outcome of the four admissibility conditions on a tabulated map.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    /// (i) strictly increasing on the grid
    pub monotone: bool,
    /// (ii) largest `|k′ − rhs| / (1 + |rhs|)` with `k′` from finite differences
    pub ode_residual: f64,
    pub ode_ok: bool,
    /// (iii) `|k(θ̲₁⁺) − θ̲|` by quadratic extrapolation from the first nodes
    pub boundary_gap: f64,
    pub boundary_ok: bool,
    /// (iv) Player 1's stopping time is finite on every interior node
    pub sigma_finite: bool,
}

impl AdmissibilityReport {
    pub fn all_ok(&self) -> bool {
        self.monotone && self.ode_ok && self.boundary_ok && self.sigma_finite
    }
}

pub fn check_admissible(map: &TypeToTypeMap) -> AdmissibilityReport {
    let thetas = map.thetas();
    let ks = map.ks();
    let fam = map.family();
    let n = thetas.len();
    let monotone = map.is_strictly_increasing();

    let mut ode_residual = 0.0f64;
    if n >= 5 {
        for i in 0..n {
            let lo = i.saturating_sub(2).min(n - 5);
            let d = lagrange_derivative(&thetas[lo..lo + 5], &ks[lo..lo + 5], i - lo);
            let rhs = fam.rhs(thetas[i], ks[i]);
            let r = if rhs.is_finite() {
                (d - rhs).abs() / (1.0 + rhs.abs())
            } else {
                f64::INFINITY
            };
            ode_residual = ode_residual.max(if r.is_nan() { f64::INFINITY } else { r });
        }
    } else {
        ode_residual = f64::INFINITY;
    }

    let m = n.min(3);
    let boundary_gap =
        (lagrange_value(&thetas[..m], &ks[..m], fam.theta1()) - fam.dist().lower()).abs();

    let sigma_finite = StrategyCurve::sigma1_from_k(map)
        .map(|s| s.values().iter().all(|v| v.is_finite()))
        .unwrap_or(false);

    AdmissibilityReport {
        monotone,
        ode_residual,
        ode_ok: ode_residual <= ODE_TOL,
        boundary_gap,
        boundary_ok: boundary_gap <= BOUNDARY_TOL,
        sigma_finite,
    }
}
