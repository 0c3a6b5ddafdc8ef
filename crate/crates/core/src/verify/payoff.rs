use std::sync::Arc;

use crate::dist::{TypeDistribution, Upper};
use crate::equilibrium::{StoppingTime, StrategyCurve};
use crate::error::{Error, Result};
use crate::numeric::{integrate, QuadConfig};

/// Distribution of an opponent's stopping time induced by a schedule and the
/// type distribution, with an optional behavioral mass `ε` that never stops.
///
/// Tracks `G(a) = P(S ≤ a)` and `M(a) = E[S; S ≤ a]` for the finite part.
#[derive(Debug, Clone)]
pub struct StoppingTimeDistribution {
    curve: StrategyCurve,
    dist: Arc<TypeDistribution>,
    epsilon: f64,
    /// node stopping times, starting at 0
    values: Vec<f64>,
    /// `G` at each node (the first entry is the atom at zero)
    cdf: Vec<f64>,
    /// `M` at each node
    partial: Vec<f64>,
    /// mass of finite stopping times beyond the last node
    tail_mass: f64,
    tail_limit: f64,
    /// mass that never stops
    mass_inf: f64,
}

impl StoppingTimeDistribution {
    pub fn new(curve: &StrategyCurve, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in [0, 1], got {epsilon}")));
        }
        let dist = curve.family().dist_arc();
        let w = 1.0 - epsilon;
        let xs = curve.types();
        let vs = curve.values();
        let cfg = QuadConfig::with_abs_tol(1e-13);
        let mut cdf = Vec::with_capacity(xs.len());
        let mut partial = Vec::with_capacity(xs.len());
        cdf.push(w * dist.cdf_unchecked(xs[0]));
        partial.push(0.0);
        for i in 1..xs.len() {
            let seg = integrate(
                |t| curve.tabulated(t) * dist.pdf_unchecked(t),
                xs[i - 1],
                xs[i],
                &cfg,
            );
            cdf.push(w * dist.cdf_unchecked(xs[i]));
            partial.push(partial[i - 1] + w * seg.value);
        }
        let last = *xs.last().unwrap();
        let s_forever = match curve.forever_threshold() {
            Upper::Finite(t) => dist.survival_unchecked(t.max(last)),
            Upper::Infinite => 0.0,
        };
        let tail_mass = (w * (dist.survival_unchecked(last) - s_forever)).max(0.0);
        Ok(Self {
            values: vs.to_vec(),
            curve: curve.clone(),
            dist,
            epsilon,
            cdf,
            partial,
            tail_mass,
            tail_limit: curve.limit(),
            mass_inf: epsilon + w * s_forever,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Mass conceding at exactly zero.
    pub fn atom_at_zero(&self) -> f64 {
        self.cdf[0]
    }

    /// Mass that never stops (behavioral types and fight-forever types).
    pub fn mass_at_infinity(&self) -> f64 {
        self.mass_inf
    }

    /// `(G(a), M(a))` for finite `a ≥ 0`.
    pub fn cdf_and_partial(&self, a: f64) -> (f64, f64) {
        if a < 0.0 {
            return (0.0, 0.0);
        }
        let n = self.values.len();
        let v_last = self.values[n - 1];
        if a >= v_last {
            let (g, m) = (self.cdf[n - 1], self.partial[n - 1]);
            if self.tail_limit.is_finite() && self.tail_limit > v_last {
                // spread the remaining finite mass linearly up to the limit
                let top = a.min(self.tail_limit);
                let dens = self.tail_mass / (self.tail_limit - v_last);
                return (
                    g + dens * (top - v_last),
                    m + dens * (top * top - v_last * v_last) / 2.0,
                );
            }
            return (g, m);
        }
        let j = self.values.partition_point(|&v| v <= a).saturating_sub(1);
        if self.values[j] == a {
            return (self.cdf[j], self.partial[j]);
        }
        let w = 1.0 - self.epsilon;
        let xs = self.curve.types();
        let x = self
            .curve
            .inverse(a)
            .unwrap_or(xs[j])
            .clamp(xs[j], xs[j + 1]);
        let seg = integrate(
            |t| self.curve.tabulated(t) * self.dist.pdf_unchecked(t),
            xs[j],
            x,
            &QuadConfig::with_abs_tol(1e-13),
        );
        (w * self.dist.cdf_unchecked(x), self.partial[j] + w * seg.value)
    }

    pub fn cdf(&self, a: f64) -> f64 {
        self.cdf_and_partial(a).0
    }

    /// Finite-stopping mass and its expected stopping time, all types included.
    /// Types beyond the grid with an unbounded schedule are charged the last
    /// node's stopping time.
    fn finite_totals(&self) -> (f64, f64) {
        let n = self.values.len();
        let v_last = self.values[n - 1];
        let tail_m = if self.tail_limit.is_finite() {
            self.tail_mass * (v_last + self.tail_limit) / 2.0
        } else {
            self.tail_mass * v_last
        };
        (self.cdf[n - 1] + self.tail_mass, self.partial[n - 1] + tail_m)
    }
}

/// Payoff of a type with value `theta` stopping at `a` against `g`.
///
/// The winner pays `δ` times the loser's stopping time plus `1 − δ` times
/// her own; ties at zero split the prize.
pub fn expected_payoff(g: &StoppingTimeDistribution, theta: f64, a: StoppingTime, delta: f64) -> f64 {
    match a {
        StoppingTime::Forever => {
            if g.mass_at_infinity() > 0.0 || delta < 1.0 {
                return f64::NEG_INFINITY;
            }
            let (gf, mf) = g.finite_totals();
            theta * gf - mf
        }
        StoppingTime::At(a) if a <= 0.0 => theta * g.atom_at_zero() / 2.0,
        StoppingTime::At(a) => {
            let (ga, ma) = g.cdf_and_partial(a);
            payoff_from_moments(theta, a, ga, ma, delta)
        }
    }
}

/// `θG − a(1 − G) − (1 − δ)aG − δM` for `a > 0`.
pub(crate) fn payoff_from_moments(theta: f64, a: f64, g: f64, m: f64, delta: f64) -> f64 {
    theta * g - a * (1.0 - g) - (1.0 - delta) * a * g - delta * m
}
