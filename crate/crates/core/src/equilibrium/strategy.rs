use std::sync::Arc;

use super::{EquilibriumFamily, Player, StoppingTime, TypeToTypeMap};
use crate::dist::Upper;
use crate::error::{Error, Result};
use crate::numeric::interp::pchip_slopes;
use crate::numeric::{integrate, Hermite, QuadConfig};

fn quad() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_intervals: 2000,
    }
}

/// `k(t) f(t) / (1 − δF(t))`, the derivative of Player 1's stopping time.
fn sigma1_density(family: &EquilibriumFamily, k: f64, t: f64) -> f64 {
    k * family.hp().weight(t)
}

/// Player 1's stopping time above the grid: `σ₁(x₀) + ∫_{x₀}^{x} k f / (1 − δF)`
/// with `k` from the exact inversion.
fn sigma1_tail(family: &EquilibriumFamily, x0: f64, s0: f64, x: f64) -> Result<f64> {
    let failure = std::cell::RefCell::new(None);
    let r = integrate(
        |t| match family.k(t) {
            Ok(k) => sigma1_density(family, k, t),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        x0,
        x,
        &quad(),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(s0 + r.value)
}

/// Supremum of Player 1's finite stopping times, by a Cauchy probe from the
/// last node toward `target` (or toward the top of the support).
fn sigma1_limit(family: &EquilibriumFamily, x0: f64, s0: f64, target: Upper) -> f64 {
    let d = family.dist();
    let probe = family.hp().probe();
    let s_start = d.survival_unchecked(x0);
    let point = |j: i32| -> Option<f64> {
        match target {
            Upper::Finite(b) => Some(b - (b - x0) * 0.5f64.powi(j)),
            Upper::Infinite => {
                let s = s_start * 0.5f64.powi(j);
                // quantiles come from the survival function, so no clamp is needed
                (s > f64::MIN_POSITIVE).then(|| d.effective_upper(s).ok()).flatten()
            }
        }
    };
    let target = match target {
        Upper::Infinite => d.upper(),
        t => t,
    };
    let (mut prev, mut value) = (x0, s0);
    let mut last_increment = f64::INFINITY;
    for j in 1..=probe.refinements as i32 {
        let Some(x) = point(j) else { break };
        let x = match target {
            Upper::Finite(b) if x >= b => break,
            _ => x,
        };
        if x <= prev {
            break;
        }
        match sigma1_tail(family, prev, value, x) {
            Ok(v) if v.is_finite() => {
                last_increment = v - value;
                value = v;
                prev = x;
            }
            _ => break,
        }
    }
    if last_increment > probe.increment_tol {
        f64::INFINITY
    } else {
        value
    }
}

/// A monotone stopping-time schedule `σᵢ` with an explicit fight-forever region.
#[derive(Debug, Clone)]
pub struct StrategyCurve {
    player: Player,
    map: TypeToTypeMap,
    /// Tabulated schedule of this player, used for slopes and inversion.
    curve: Hermite,
    /// Player 1's unscaled nodes; values between them come from quadrature.
    p1: Arc<Hermite>,
    forever_threshold: Upper,
    limit: f64,
    /// Multiplier applied past the grid (1 except for tampered copies).
    scale: f64,
}

impl StrategyCurve {
    /// `σ₁(θ) = ∫_{θ̲₁}^{θ} k f / (1 − δF)` by cumulative quadrature over the map's nodes.
    pub fn sigma1_from_k(map: &TypeToTypeMap) -> Result<Self> {
        if !map.is_strictly_increasing() {
            return Err(Error::InvariantViolation(
                "type-to-type map is not strictly increasing".into(),
            ));
        }
        let family = map.family().clone();
        let theta1 = family.theta1();
        if map.thetas()[0] < theta1 {
            return Err(Error::InvariantViolation(format!(
                "map starts at {} below the highest zero-conceding type {theta1}",
                map.thetas()[0]
            )));
        }
        let mut xs = vec![theta1];
        let mut ks = vec![family.dist().lower()];
        for (&t, &k) in map.thetas().iter().zip(map.ks()) {
            if t > theta1 {
                xs.push(t);
                ks.push(k);
            }
        }
        let mut values = Vec::with_capacity(xs.len());
        values.push(0.0);
        for i in 1..xs.len() {
            let r = integrate(
                |t| match map.eval(t) {
                    Ok(k) => sigma1_density(&family, k, t),
                    Err(_) => f64::NAN,
                },
                xs[i - 1],
                xs[i],
                &quad(),
            );
            let v = values[i - 1] + r.value;
            if !v.is_finite() {
                return Err(Error::InvariantViolation(format!(
                    "stopping time is not finite at type {}",
                    xs[i]
                )));
            }
            values.push(v);
        }
        let fallback = pchip_slopes(&xs, &values);
        let ds: Vec<f64> = xs
            .iter()
            .zip(&ks)
            .zip(fallback)
            .map(|((&t, &k), fb)| {
                let s = sigma1_density(&family, k, t);
                if s.is_finite() {
                    s
                } else {
                    fb
                }
            })
            .collect();
        let forever_threshold = family.player1_forever()?;
        let limit = sigma1_limit(&family, *xs.last().unwrap(), *values.last().unwrap(), forever_threshold);
        let curve = Hermite::new(xs, values, ds);
        Ok(Self {
            player: Player::One,
            map: map.clone(),
            p1: Arc::new(curve.clone()),
            curve,
            forever_threshold,
            limit,
            scale: 1.0,
        })
    }

    /// `σ₂(y) = σ₁(k⁻¹(y))`, tabulated at the partners of Player 1's nodes.
    pub fn sigma2_from_k(map: &TypeToTypeMap, sigma1: &StrategyCurve) -> Result<Self> {
        if sigma1.player != Player::One {
            return Err(Error::InvalidParameter("expected Player 1's curve".into()));
        }
        let family = map.family().clone();
        let lower = family.dist().lower();
        let mut ys = vec![lower];
        let mut values = vec![0.0];
        let mut slopes = vec![f64::NAN];
        for ((&t, &k), &dk) in map.thetas().iter().zip(map.ks()).zip(map.slopes()) {
            if k <= *ys.last().unwrap() {
                continue;
            }
            let s1 = sigma1.unscaled_sigma1(t)?;
            ys.push(k);
            values.push(s1);
            slopes.push(sigma1.derivative(t) / dk);
        }
        if ys.len() < 2 {
            return Err(Error::InvalidParameter("map has no partners above the lower bound".into()));
        }
        let fallback = pchip_slopes(&ys, &values);
        for (s, fb) in slopes.iter_mut().zip(fallback) {
            if !s.is_finite() {
                *s = fb;
            }
        }
        Ok(Self {
            player: Player::Two,
            map: map.clone(),
            curve: Hermite::new(ys, values, slopes),
            p1: sigma1.p1.clone(),
            forever_threshold: family.player2_forever()?,
            limit: sigma1.limit,
            scale: 1.0,
        })
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn family(&self) -> &EquilibriumFamily {
        self.map.family()
    }

    /// The type-to-type map the schedule was built from.
    pub fn map(&self) -> &TypeToTypeMap {
        &self.map
    }

    /// Nodes `(type, stopping time)`; the first node concedes at zero.
    pub fn types(&self) -> &[f64] {
        self.curve.xs()
    }

    pub fn values(&self) -> &[f64] {
        self.curve.ys()
    }

    /// Lowest type that fights forever (`Infinite` if none).
    pub fn forever_threshold(&self) -> Upper {
        self.forever_threshold
    }

    /// Supremum of the finite stopping times; `+∞` when unbounded.
    pub fn limit(&self) -> f64 {
        self.limit
    }

    /// Types at or below this concede at zero.
    pub fn zero_threshold(&self) -> f64 {
        self.curve.first_x()
    }

    pub fn last_type(&self) -> f64 {
        self.curve.last_x()
    }

    pub fn eval(&self, theta: f64) -> Result<StoppingTime> {
        if let Upper::Finite(t) = self.forever_threshold {
            if theta >= t {
                return Ok(StoppingTime::Forever);
            }
        }
        let x = match self.player {
            Player::One => theta,
            Player::Two => {
                let ks = self.map.ks();
                if theta <= self.family().dist().lower() {
                    return Ok(StoppingTime::At(0.0));
                }
                if theta >= ks[0] && theta <= ks[ks.len() - 1] {
                    self.map.curve().inverse(theta).expect("inside the node range")
                } else {
                    match self.family().k_inverse(theta)? {
                        Some(x) => x,
                        None => return Ok(StoppingTime::Forever),
                    }
                }
            }
        };
        Ok(StoppingTime::At(self.scale * self.unscaled_sigma1(x)?))
    }

    /// Player 1's stopping time at `x`: the nearest node below plus the
    /// quadrature of `k f / (1 − δF)` from there.
    fn unscaled_sigma1(&self, x: f64) -> Result<f64> {
        let p1 = &*self.p1;
        if x <= p1.first_x() {
            return Ok(0.0);
        }
        let i = if x >= p1.last_x() { p1.xs().len() - 1 } else { p1.segment(x) };
        let (x0, s0) = (p1.xs()[i], p1.ys()[i]);
        if x == x0 {
            return Ok(s0);
        }
        let map = &self.map;
        let family = map.family();
        let failure = std::cell::RefCell::new(None);
        let r = integrate(
            |t| match map.eval(t) {
                Ok(k) => sigma1_density(family, k, t),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            },
            x0,
            x,
            &quad(),
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(s0 + r.value)
    }

    /// Hermite interpolant through the nodes, without the quadrature refinement.
    pub fn tabulated(&self, theta: f64) -> f64 {
        self.curve.eval(theta)
    }

    /// Slope of the tabulated schedule (on the node range).
    pub fn derivative(&self, theta: f64) -> f64 {
        self.curve.derivative(theta)
    }

    /// Type whose stopping time is `a`, on the node range.
    pub fn inverse(&self, a: f64) -> Option<f64> {
        self.curve.inverse(a)
    }

    /// Copy with every finite stopping time multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let curve = Hermite::new(
            self.curve.xs().to_vec(),
            self.curve.ys().iter().map(|v| v * factor).collect(),
            self.curve.slopes().iter().map(|v| v * factor).collect(),
        );
        Self {
            curve,
            limit: self.limit * factor,
            scale: self.scale * factor,
            map: self.map.clone(),
            p1: self.p1.clone(),
            ..*self
        }
    }
}

/// One CSV row of a solved equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub theta: f64,
    pub k: f64,
    pub sigma1: StoppingTime,
    pub sigma2: StoppingTime,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub map: TypeToTypeMap,
    pub sigma1: StrategyCurve,
    pub sigma2: StrategyCurve,
}

impl Solution {
    pub fn from_map(map: TypeToTypeMap) -> Result<Self> {
        let sigma1 = StrategyCurve::sigma1_from_k(&map)?;
        let sigma2 = StrategyCurve::sigma2_from_k(&map, &sigma1)?;
        Ok(Self { map, sigma1, sigma2 })
    }

    pub fn family(&self) -> &EquilibriumFamily {
        self.map.family()
    }

    /// Both players' stopping times at each type, with the partner of Player 1.
    /// `k` is `θ̲` at and below `θ̲₁` and infinite where Player 1 has no partner.
    pub fn rows(&self, thetas: &[f64]) -> Result<Vec<Row>> {
        let fam = self.family();
        let lower = fam.dist().lower();
        thetas
            .iter()
            .map(|&theta| {
                let k = if theta <= fam.theta1() {
                    lower
                } else {
                    match self.map.eval(theta) {
                        Ok(k) => k,
                        Err(Error::PartnerOutOfSupport { .. }) => f64::INFINITY,
                        Err(e) => return Err(e),
                    }
                };
                Ok(Row {
                    theta,
                    k,
                    sigma1: self.sigma1.eval(theta)?,
                    sigma2: self.sigma2.eval(theta)?,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::{type_grid, Anchor, ClosedForm};
    use super::*;
    use crate::dist::TypeDistribution;
    use crate::potential::HazardPotential;

    fn solve(cf: ClosedForm, n: usize) -> Solution {
        cf.family().unwrap().solve(n, 1e-6).unwrap()
    }

    #[test]
    fn exponential_strategies() {
        let cf = ClosedForm::ExpGamma { lambda: 1.0, gamma: 1.0 / 3.0 };
        let s = solve(cf, 256);
        let a1 = s.sigma1.eval(2.0).unwrap().as_f64();
        let a2 = s.sigma2.eval(2.0).unwrap().as_f64();
        assert!((a1 - 2.0 / 3.0).abs() < 1e-8, "{a1}");
        assert!((a2 - 6.0).abs() < 1e-7, "{a2}");
        assert_eq!(s.sigma1.eval(0.0).unwrap(), StoppingTime::At(0.0));
        assert_eq!(s.sigma1.forever_threshold(), Upper::Infinite);
        assert_eq!(s.sigma1.limit(), f64::INFINITY);
        // beyond the grid
        let far = s.sigma2.eval(20.0).unwrap().as_f64();
        assert!((far - 600.0).abs() < 1e-6 * 600.0, "{far}");
    }

    #[test]
    fn pareto_strategies() {
        let cf = ClosedForm::ParetoTheta1 { theta_min: 1.0, alpha: 1.0, theta1: 2.0 };
        let s = solve(cf, 256);
        let a1 = s.sigma1.eval(3.0).unwrap().as_f64();
        assert!((a1 - 2.0 * 1.25f64.ln()).abs() < 1e-9);
        let a2 = s.sigma2.eval(1.5).unwrap().as_f64();
        assert!((a2 - 2.0 * 2f64.ln()).abs() < 1e-8, "{a2}");
        assert_eq!(s.sigma2.forever_threshold(), Upper::Finite(2.0));
        assert_eq!(s.sigma2.eval(2.0).unwrap(), StoppingTime::Forever);
        assert_eq!(s.sigma1.eval(1.7).unwrap(), StoppingTime::At(0.0));
        // σ₂ blows up just below the threshold
        let near = s.sigma2.eval(2.0 - 1e-4).unwrap().as_f64();
        assert!(near > 10.0, "{near}");
    }

    #[test]
    fn uniform_symmetric_strategy() {
        let s = solve(ClosedForm::UniformGamma { gamma: 1.0 }, 256);
        let v = s.sigma1.eval(0.5).unwrap().as_f64();
        assert!((v - (2f64.ln() - 0.5)).abs() < 1e-9);
        for &t in &[0.1, 0.33, 0.5, 0.9, 0.999] {
            let a = s.sigma1.eval(t).unwrap().as_f64();
            let b = s.sigma2.eval(t).unwrap().as_f64();
            assert!((a - b).abs() < 1e-9, "{t}");
        }
    }

    #[test]
    fn closed_forms_match_numeric_curves() {
        let cases = [
            ClosedForm::ExpGamma { lambda: 1.5, gamma: 0.6 },
            ClosedForm::UniformGamma { gamma: 2.0 },
            ClosedForm::UniformGamma { gamma: 0.5 },
            ClosedForm::ParetoTheta1 { theta_min: 1.0, alpha: 2.0, theta1: 1.3 },
        ];
        for cf in cases {
            let s = solve(cf, 512);
            let d = cf.dist();
            for p in [0.05, 0.3, 0.6, 0.9, 0.99] {
                let t = d.quantile(p).unwrap();
                for (pl, curve) in [(Player::One, &s.sigma1), (Player::Two, &s.sigma2)] {
                    let want = cf.sigma(t, pl);
                    let got = curve.eval(t).unwrap();
                    match (want, got) {
                        (StoppingTime::At(w), StoppingTime::At(g)) => {
                            assert!((w - g).abs() < 1e-7 * (1.0 + w), "{cf:?} {pl:?} {t}: {w} vs {g}")
                        }
                        _ => assert_eq!(want, got, "{cf:?} {pl:?} {t}"),
                    }
                }
            }
        }
    }

    #[test]
    fn non_monotone_map_is_rejected() {
        let f = ClosedForm::ExpGamma { lambda: 1.0, gamma: 0.5 }.family().unwrap();
        let m = TypeToTypeMap::from_values(f, vec![0.1, 0.2, 0.3, 0.4], vec![0.05, 0.1, 0.09, 0.2]).unwrap();
        assert!(matches!(StrategyCurve::sigma1_from_k(&m), Err(Error::InvariantViolation(_))));
    }

    #[test]
    fn perturbed_limit_is_finite() {
        let d = TypeDistribution::exponential(1.0).unwrap();
        let hp = HazardPotential::new(d.clone(), 0.9).unwrap();
        let fam = EquilibriumFamily::new(hp, Anchor::C(0.5)).unwrap();
        let grid = type_grid(&d, 0.0, 128, 1e-6).unwrap();
        let s = Solution::from_map(fam.map(&grid).unwrap()).unwrap();
        let m = match fam.player2_forever().unwrap() {
            Upper::Finite(m) => m,
            Upper::Infinite => panic!("threshold should be finite"),
        };
        let lim = s.sigma1.limit();
        assert!(lim.is_finite());
        assert!(lim <= m / 0.1);
        assert_eq!(s.sigma2.eval(m * 1.01).unwrap(), StoppingTime::Forever);
    }

    #[test]
    fn scaled_doubles_values() {
        let s = solve(ClosedForm::UniformGamma { gamma: 1.0 }, 64);
        let d = s.sigma1.scaled(2.0);
        for &t in &[0.2, 0.7] {
            assert!((d.eval(t).unwrap().as_f64() - 2.0 * s.sigma1.eval(t).unwrap().as_f64()).abs() < 1e-14);
        }
    }
}
