use serde::Serialize;

use super::payoff::{expected_payoff, payoff_from_moments, StoppingTimeDistribution};
use crate::dist::TypeDistribution;
use crate::equilibrium::{Player, Solution, StoppingTime, StrategyCurve, TypeToTypeMap};
use crate::error::{Error, Result};

/// Acceptance threshold for the best-response gap: the smaller of an absolute
/// bound and `c · Δa · θ_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub absolute: f64,
    pub c_factor: f64,
    pub delta_a: f64,
    pub theta_max: f64,
    pub effective: f64,
}

impl Tolerances {
    pub const ABSOLUTE: f64 = 1e-3;
    pub const C_FACTOR: f64 = 2.0;

    pub fn new(delta_a: f64, theta_max: f64) -> Self {
        let bound = Self::C_FACTOR * delta_a * theta_max;
        Self {
            absolute: Self::ABSOLUTE,
            c_factor: Self::C_FACTOR,
            delta_a,
            theta_max,
            effective: Self::ABSOLUTE.min(bound),
        }
    }
}

/// A strategy pair together with the payoff rule it is checked against.
#[derive(Debug, Clone)]
pub struct Profile {
    pub sigma1: StrategyCurve,
    pub sigma2: StrategyCurve,
    /// share of the loser's stopping time paid by the winner
    pub delta: f64,
    /// behavioral mass that never stops
    pub epsilon: f64,
}

impl Profile {
    pub fn from_solution(s: &Solution) -> Self {
        Self {
            sigma1: s.sigma1.clone(),
            sigma2: s.sigma2.clone(),
            delta: s.family().delta(),
            epsilon: 0.0,
        }
    }

    pub fn curve(&self, p: Player) -> &StrategyCurve {
        match p {
            Player::One => &self.sigma1,
            Player::Two => &self.sigma2,
        }
    }

    pub fn dist(&self) -> &TypeDistribution {
        self.sigma1.family().dist()
    }

    /// `1.5 σᵢ` at the `1 − tail` quantile, maximised over both players.
    /// A player who fights forever there contributes her last tabulated value.
    pub fn deviation_span(&self, tail: f64) -> Result<f64> {
        let top = self.dist().effective_upper(tail)?;
        let mut span = 0.0f64;
        for p in [Player::One, Player::Two] {
            let c = self.curve(p);
            let v = match c.eval(top) {
                Ok(StoppingTime::At(v)) => v,
                _ => *c.values().last().unwrap(),
            };
            span = span.max(v);
        }
        Ok(1.5 * span)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub player: Player,
    pub theta: f64,
    pub assigned: StoppingTime,
    pub best_deviation: f64,
    pub gain: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub max_gain: f64,
    pub identity_residual: f64,
    pub rows: Vec<GapRow>,
    pub tolerances: Tolerances,
    pub passed: bool,
}

impl VerificationReport {
    pub fn flagged(&self) -> impl Iterator<Item = &GapRow> {
        self.rows.iter().filter(|r| r.flagged)
    }
}

/// `n` types at the probability midpoints of `[0, 1 − tail]`.
pub fn quantile_types(d: &TypeDistribution, n: usize, tail: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one type".into()));
    }
    (0..n)
        .map(|i| d.quantile((i as f64 + 0.5) / n as f64 * (1.0 - tail)))
        .collect()
}

/// `n` equally spaced stopping points on `[0, span]`.
pub fn deviation_grid(span: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(span > 0.0 && span.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "deviation grid needs n ≥ 2 and a finite positive span, got n = {n}, span = {span}"
        )));
    }
    Ok((0..n).map(|i| span * i as f64 / (n - 1) as f64).collect())
}

/// Inserts the midpoint of every cell, so the old grid is a subset of the new one.
pub fn refine_grid(grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for w in grid.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.extend(grid.last());
    out
}

/// Largest gain any type of either player obtains by moving from her assigned
/// stopping point to a point of `deviations`.
pub fn best_response_gap(
    profile: &Profile,
    types: &[f64],
    deviations: &[f64],
) -> Result<VerificationReport> {
    if deviations.len() < 2 || types.is_empty() {
        return Err(Error::InvalidParameter("need types and at least two deviation points".into()));
    }
    let delta_a = deviations
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0f64, f64::max);
    let theta_max = types.iter().copied().fold(0.0f64, f64::max);
    let tolerances = Tolerances::new(delta_a, theta_max);

    let mut rows = Vec::with_capacity(2 * types.len());
    for (me, opp) in [(Player::One, Player::Two), (Player::Two, Player::One)] {
        let g = StoppingTimeDistribution::new(profile.curve(opp), profile.epsilon)?;
        let moments: Vec<(f64, f64)> = deviations.iter().map(|&a| g.cdf_and_partial(a)).collect();
        for &theta in types {
            let assigned = profile.curve(me).eval(theta)?;
            let base = expected_payoff(&g, theta, assigned, profile.delta);
            let (mut best, mut best_a) = (base, assigned.as_f64());
            for (&a, &(ga, ma)) in deviations.iter().zip(&moments) {
                let p = if a <= 0.0 {
                    theta * g.atom_at_zero() / 2.0
                } else {
                    payoff_from_moments(theta, a, ga, ma, profile.delta)
                };
                if p > best {
                    best = p;
                    best_a = a;
                }
            }
            let gain = if base.is_finite() {
                best - base
            } else if best.is_finite() {
                f64::INFINITY
            } else {
                0.0
            };
            rows.push(GapRow {
                player: me,
                theta,
                assigned,
                best_deviation: best_a,
                gain,
                flagged: gain > tolerances.effective,
            });
        }
    }
    let max_gain = rows.iter().map(|r| r.gain).fold(0.0f64, f64::max);
    let identity_residual = integral_identity_residual(profile.sigma1.map())?;
    Ok(VerificationReport {
        max_gain,
        identity_residual,
        passed: max_gain <= tolerances.effective,
        rows,
        tolerances,
    })
}

/// `max |∫_{k(θ)}^{θ} f / (x (1 − δF)) dx − C|` over the map's nodes above `θ̲₁`,
/// with the integral evaluated by quadrature.
pub fn integral_identity_residual(map: &TypeToTypeMap) -> Result<f64> {
    let fam = map.family();
    let mut worst = 0.0f64;
    for (&t, &k) in map.thetas().iter().zip(map.ks()) {
        if t <= fam.theta1() || !k.is_finite() {
            continue;
        }
        let r = (fam.hp().integral_between(k, t)? - fam.c()).abs();
        worst = worst.max(r);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::ClosedForm;

    fn uniform_profile() -> Profile {
        let s = ClosedForm::UniformGamma { gamma: 1.0 }.family().unwrap().solve(512, 1e-6).unwrap();
        Profile::from_solution(&s)
    }

    #[test]
    fn refined_grid_contains_the_original() {
        let g = deviation_grid(3.0, 4).unwrap();
        let r = refine_grid(&g);
        assert_eq!(r.len(), 7);
        assert!(g.iter().all(|x| r.contains(x)));
    }

    #[test]
    fn uniform_symmetric_passes() {
        let p = uniform_profile();
        let types = quantile_types(p.dist(), 20, 1e-6).unwrap();
        let dev = deviation_grid(p.deviation_span(1e-6).unwrap(), 200).unwrap();
        let r = best_response_gap(&p, &types, &dev).unwrap();
        assert!(r.passed, "max gain {}", r.max_gain);
        assert!(r.max_gain < 1e-6);
        assert!(r.identity_residual < 1e-8);
    }

    #[test]
    fn doubled_schedule_is_flagged() {
        let mut p = uniform_profile();
        p.sigma1 = p.sigma1.scaled(2.0);
        let types = quantile_types(p.dist(), 20, 1e-6).unwrap();
        let dev = deviation_grid(p.deviation_span(1e-6).unwrap(), 200).unwrap();
        let r = best_response_gap(&p, &types, &dev).unwrap();
        assert!(!r.passed);
        assert!(r.max_gain > 0.01);
        assert!(r.flagged().any(|row| row.player == Player::One && row.theta > 0.5));
    }

    #[test]
    fn report_serializes_expected_fields() {
        let p = uniform_profile();
        let types = quantile_types(p.dist(), 4, 1e-6).unwrap();
        let dev = deviation_grid(1.0, 8).unwrap();
        let r = best_response_gap(&p, &types, &dev).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["max_gain", "identity_residual", "rows", "tolerances"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["rows"].as_array().unwrap().len(), 8);
    }
}
