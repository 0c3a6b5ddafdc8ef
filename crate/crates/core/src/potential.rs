//! The hazard potential `Λ_δ(θ) = ∫_{θ°}^{θ} f(x) / (x (1 − δF(x))) dx`.
//!
//! `δ = 1` gives the unperturbed potential `∫ h(x)/x dx`.

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::dist::{Family, TypeDistribution, Upper};
use crate::error::{Boundary, Error, Result};
use crate::numeric::{integrate, integrate_to_infinity, QuadConfig};

/// Constants for the numeric boundary-limit probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitProbe {
    pub refinements: usize,
    /// A last increment above this declares divergence.
    pub increment_tol: f64,
    /// Probes toward the top stop at the `1 − upper_clamp` quantile.
    pub upper_clamp: f64,
}

impl Default for LimitProbe {
    fn default() -> Self {
        Self {
            refinements: 60,
            increment_tol: 1e-8,
            upper_clamp: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryLimits {
    /// `−∞` when divergent.
    pub lower: f64,
    /// `+∞` when divergent.
    pub upper: f64,
    pub lower_divergent: bool,
    pub upper_divergent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    /// `Λ̲ = −∞`: the integration constant is the free parameter.
    A,
    /// `Λ̲` finite: the highest type conceding at zero is the free parameter.
    B,
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Case::A => "A",
            Case::B => "B",
        })
    }
}

#[derive(Debug, Clone)]
pub struct HazardPotential {
    dist: Arc<TypeDistribution>,
    reference: f64,
    delta: f64,
    probe: LimitProbe,
    quad: QuadConfig,
    limits: OnceLock<BoundaryLimits>,
}

impl HazardPotential {
    /// Potential anchored at the median.
    pub fn new(dist: impl Into<Arc<TypeDistribution>>, delta: f64) -> Result<Self> {
        let dist = dist.into();
        let reference = dist.median();
        Self::with_reference(dist, reference, delta)
    }

    pub fn with_reference(
        dist: impl Into<Arc<TypeDistribution>>,
        reference: f64,
        delta: f64,
    ) -> Result<Self> {
        let dist = dist.into();
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!("delta must lie in [0, 1], got {delta}")));
        }
        if !dist.support().contains_open(reference) {
            return Err(Error::InvalidParameter(format!(
                "reference point {reference} must lie inside the open support"
            )));
        }
        Ok(Self {
            dist,
            reference,
            delta,
            probe: LimitProbe::default(),
            quad: QuadConfig::default(),
            limits: OnceLock::new(),
        })
    }

    pub fn with_probe(mut self, probe: LimitProbe) -> Self {
        self.probe = probe;
        self.limits = OnceLock::new();
        self
    }

    /// Same distribution and reference, different `δ`.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::with_reference(self.dist.clone(), self.reference, delta).map(|h| h.with_probe(self.probe))
    }

    pub fn dist(&self) -> &TypeDistribution {
        &self.dist
    }

    pub fn dist_arc(&self) -> Arc<TypeDistribution> {
        self.dist.clone()
    }

    pub fn reference(&self) -> f64 {
        self.reference
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn probe(&self) -> LimitProbe {
        self.probe
    }

    /// `x · g(x)` where `g` is the potential's integrand; equals the hazard at `δ = 1`.
    pub fn weight(&self, x: f64) -> f64 {
        let d = &*self.dist;
        if self.delta == 1.0 {
            d.hazard_unchecked(x)
        } else {
            d.pdf_unchecked(x) / ((1.0 - self.delta) + self.delta * d.survival_unchecked(x))
        }
    }

    /// `Λ'(x) = f(x) / (x (1 − δF(x)))`.
    pub fn integrand(&self, x: f64) -> f64 {
        self.weight(x) / x
    }

    fn check_open(&self, theta: f64) -> Result<()> {
        let s = self.dist.support();
        if !s.contains_open(theta) {
            return Err(Error::Domain {
                x: theta,
                lower: s.lower,
                upper: s.upper.as_f64(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, theta: f64) -> Result<f64> {
        self.check_open(theta)?;
        if theta == self.reference {
            return Ok(0.0);
        }
        if let Some(v) = self.closed_form(theta) {
            return Ok(v);
        }
        self.integral_between(self.reference, theta)
    }

    fn closed_form(&self, theta: f64) -> Option<f64> {
        let r = self.reference;
        match *self.dist.family() {
            Family::Exponential { lambda } if self.delta == 1.0 => Some(lambda * (theta / r).ln()),
            Family::Pareto { alpha, .. } if self.delta == 1.0 => Some(alpha * (1.0 / r - 1.0 / theta)),
            Family::Uniform01 => {
                let d = self.delta;
                Some((theta / (1.0 - d * theta)).ln() - (r / (1.0 - d * r)).ln())
            }
            _ => None,
        }
    }

    fn closed_inverse(&self, y: f64) -> Option<f64> {
        let r = self.reference;
        match *self.dist.family() {
            Family::Exponential { lambda } if self.delta == 1.0 => Some(r * (y / lambda).exp()),
            Family::Pareto { alpha, .. } if self.delta == 1.0 => Some(1.0 / (1.0 / r - y / alpha)),
            Family::Uniform01 => {
                let c = r / (1.0 - self.delta * r) * y.exp();
                Some(c / (1.0 + self.delta * c))
            }
            _ => None,
        }
    }

    /// `∫_a^b g` for interior `a`, `b`, integrated in `u = ln x`.
    pub fn integral_between(&self, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let r = integrate(|u| self.weight(u.exp()), a.ln(), b.ln(), &self.quad);
        if !r.value.is_finite() {
            return Err(Error::Quadrature(format!(
                "hazard potential between {a} and {b} is not finite"
            )));
        }
        if !r.converged {
            log::debug!("potential quadrature on [{a}, {b}] stopped with error {:e}", r.error);
        }
        Ok(r.value)
    }

    pub fn limits(&self) -> BoundaryLimits {
        *self.limits.get_or_init(|| self.compute_limits())
    }

    fn compute_limits(&self) -> BoundaryLimits {
        let r = self.reference;
        let closed = match *self.dist.family() {
            Family::Exponential { .. } if self.delta == 1.0 => {
                Some((f64::NEG_INFINITY, f64::INFINITY))
            }
            Family::Pareto { theta_min, alpha } if self.delta == 1.0 => {
                Some((alpha * (1.0 / r - 1.0 / theta_min), alpha / r))
            }
            Family::Uniform01 => {
                let d = self.delta;
                let upper = if d == 1.0 {
                    f64::INFINITY
                } else {
                    (1.0 / (1.0 - d)).ln() - (r / (1.0 - d * r)).ln()
                };
                Some((f64::NEG_INFINITY, upper))
            }
            _ => None,
        };
        match closed {
            Some((lower, upper)) => BoundaryLimits {
                lower,
                upper,
                lower_divergent: lower == f64::NEG_INFINITY,
                upper_divergent: upper == f64::INFINITY,
            },
            None => self.numeric_limits(),
        }
    }

    /// Limits decided by the Cauchy probe alone, bypassing closed forms.
    pub fn numeric_limits(&self) -> BoundaryLimits {
        let lower = self.lower_limit_numeric();
        let upper = self.upper_limit_numeric();
        BoundaryLimits {
            lower,
            upper,
            lower_divergent: lower == f64::NEG_INFINITY,
            upper_divergent: upper == f64::INFINITY,
        }
    }

    fn x_quad(&self, a: f64, b: f64) -> f64 {
        integrate(|x| self.integrand(x), a, b, &self.quad).value
    }

    /// Walks a geometric sequence toward a boundary and reports whether the
    /// last increment of `Λ` stays above the Cauchy threshold.
    fn probe_diverges(&self, points: impl Iterator<Item = f64>) -> bool {
        let mut prev = self.reference;
        let mut last_increment = f64::INFINITY;
        for x in points.take(self.probe.refinements) {
            if x == prev || !self.integrand(x).is_finite() {
                break;
            }
            let inc = self.x_quad(prev, x).abs();
            if !inc.is_finite() {
                return true;
            }
            last_increment = inc;
            prev = x;
        }
        last_increment > self.probe.increment_tol
    }

    fn lower_limit_numeric(&self) -> f64 {
        let lo = self.dist.lower();
        let r = self.reference;
        let points = (1..).map(move |j| lo + (r - lo) * 0.5f64.powi(j));
        if self.probe_diverges(points) {
            return f64::NEG_INFINITY;
        }
        self.x_quad(r, lo)
    }

    fn upper_limit_numeric(&self) -> f64 {
        let r = self.reference;
        let clamp = self
            .dist
            .effective_upper(self.probe.upper_clamp)
            .unwrap_or(f64::INFINITY);
        match self.dist.upper() {
            Upper::Finite(top) => {
                if self.delta < 1.0 {
                    // integrand is bounded by f / (θ° (1 − δ)) above the reference
                    return self.x_quad(r, top);
                }
                let points = (1..).map(move |j| top - (top - r) * 0.5f64.powi(j)).take_while(move |&x| x <= clamp);
                if self.probe_diverges(points) {
                    f64::INFINITY
                } else {
                    self.x_quad(r, top)
                }
            }
            Upper::Infinite => {
                if self.delta == 1.0 {
                    let points = (1..).map(move |j| r * 2f64.powi(j)).take_while(move |&x| x <= clamp);
                    if self.probe_diverges(points) {
                        return f64::INFINITY;
                    }
                }
                integrate_to_infinity(|x| self.integrand(x), r, &self.quad).value
            }
        }
    }

    pub fn classify(&self) -> Result<Case> {
        if self.delta != 1.0 {
            return Err(Error::Precondition(format!(
                "classification uses the unperturbed potential; got delta = {}",
                self.delta
            )));
        }
        Ok(if self.limits().lower_divergent { Case::A } else { Case::B })
    }

    /// `θ` with `Λ(θ) = y`.
    pub fn invert(&self, y: f64) -> Result<f64> {
        let lim = self.limits();
        if y.is_nan() {
            return Err(Error::InvalidParameter("cannot invert NaN".into()));
        }
        if y <= lim.lower {
            return Err(Error::Range {
                value: y,
                boundary: Boundary::Lower,
                limit: lim.lower,
            });
        }
        if y >= lim.upper {
            return Err(Error::Range {
                value: y,
                boundary: Boundary::Upper,
                limit: lim.upper,
            });
        }
        if y == 0.0 {
            return Ok(self.reference);
        }
        if let Some(t) = self.closed_inverse(y) {
            if self.dist.support().contains_open(t) {
                return Ok(t);
            }
            // rounding pushed the answer onto the boundary
            return Err(Error::Range {
                value: y,
                boundary: if y < 0.0 { Boundary::Lower } else { Boundary::Upper },
                limit: if y < 0.0 { lim.lower } else { lim.upper },
            });
        }
        self.invert_numeric(y)
    }

    /// Safeguarded Newton on a geometrically expanded bracket.
    fn invert_numeric(&self, y: f64) -> Result<f64> {
        let r = self.reference;
        let s = self.dist.support();
        let range_err = |boundary| Error::Range {
            value: y,
            boundary,
            limit: match boundary {
                Boundary::Lower => self.limits().lower,
                Boundary::Upper => self.limits().upper,
            },
        };
        let (mut lo, mut hi);
        if y > 0.0 {
            lo = r;
            let mut acc = 0.0;
            let mut j = 1;
            loop {
                let x = match s.upper {
                    Upper::Finite(top) => top - (top - r) * 0.5f64.powi(j),
                    Upper::Infinite => r * 2f64.powi(j),
                };
                if x <= lo || !x.is_finite() || j > 1100 {
                    return Err(range_err(Boundary::Upper));
                }
                acc += self.integral_between(lo, x)?;
                if acc >= y {
                    hi = x;
                    break;
                }
                lo = x;
                j += 1;
            }
        } else {
            hi = r;
            let mut acc = 0.0;
            let mut j = 1;
            loop {
                let x = s.lower + (r - s.lower) * 0.5f64.powi(j);
                if x >= hi || x <= s.lower || j > 1100 {
                    return Err(range_err(Boundary::Lower));
                }
                acc -= self.integral_between(x, hi)?;
                if acc <= y {
                    lo = x;
                    break;
                }
                hi = x;
                j += 1;
            }
        }
        let mut x = if hi / lo > 2.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        for _ in 0..300 {
            let v = self.eval(x)? - y;
            if v == 0.0 {
                return Ok(x);
            }
            if v < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let newton = x - v / self.integrand(x);
            let in_bracket = newton > lo && newton < hi && newton.is_finite();
            if in_bracket && (newton - x).abs() <= 1e-14 * x {
                return Ok(newton);
            }
            if hi - lo <= 4.0 * f64::EPSILON * x {
                return Ok(x);
            }
            let bisect = if lo > 0.0 && hi / lo > 2.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
            x = if in_bracket { newton } else { bisect };
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exp1() -> TypeDistribution {
        TypeDistribution::exponential(1.0).unwrap()
    }

    fn pareto11() -> TypeDistribution {
        TypeDistribution::pareto(1.0, 1.0).unwrap()
    }

    /// Plain x-space quadrature of the defining integral, independent of the
    /// closed forms and of the log substitution.
    fn oracle(d: &TypeDistribution, delta: f64, a: f64, b: f64) -> f64 {
        integrate(
            |x| d.pdf(x).unwrap() / (x * (1.0 - delta * d.cdf(x).unwrap())),
            a,
            b,
            &QuadConfig::default(),
        )
        .value
    }

    #[test]
    fn eval_examples() {
        let hp = HazardPotential::with_reference(exp1(), 1.0, 1.0).unwrap();
        assert!((hp.eval(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(hp.eval(1.0).unwrap(), 0.0);
        let u = TypeDistribution::uniform01();
        let hp = HazardPotential::with_reference(u.clone(), 0.5, 1.0).unwrap();
        let v = hp.eval(0.75).unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-14);
        assert!((v - oracle(&u, 1.0, 0.5, 0.75)).abs() < 1e-10);
    }

    #[test]
    fn eval_rejects_outside_support() {
        let hp = HazardPotential::new(TypeDistribution::uniform01(), 1.0).unwrap();
        assert!(matches!(hp.eval(1.0), Err(Error::Domain { .. })));
        assert!(matches!(hp.eval(0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn numeric_path_matches_closed_forms() {
        for (d, r) in [(exp1(), 0.7), (pareto11(), 2.0)] {
            let hp = HazardPotential::with_reference(d, r, 1.0).unwrap();
            for &t in &[1.2, 1.9, 3.5, 8.0] {
                let q = hp.integral_between(r, t).unwrap();
                assert!((q - hp.eval(t).unwrap()).abs() < 1e-11, "{t}");
            }
        }
    }

    #[test]
    fn invert_examples() {
        let hp = HazardPotential::with_reference(exp1(), 1.0, 1.0).unwrap();
        let t = hp.invert(1.0).unwrap();
        assert!((hp.eval(t).unwrap() - 1.0).abs() < 1e-12);
        assert!((t - std::f64::consts::E).abs() < 1e-14);
        assert_eq!(hp.invert(0.0).unwrap(), 1.0);
        // Pareto with the reference at the bottom of the support is not allowed,
        // so anchor at 1.5 and shift the target accordingly: Λ(2) − Λ(1) = 0.5.
        let hp = HazardPotential::with_reference(pareto11(), 1.5, 1.0).unwrap();
        let base = 1.0 / 1.5 - 1.0;
        let t = hp.invert(base + 0.5).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn invert_reports_violated_boundary() {
        let hp = HazardPotential::with_reference(pareto11(), 2.0, 1.0).unwrap();
        let lim = hp.limits();
        assert!(matches!(
            hp.invert(lim.upper + 0.1),
            Err(Error::Range { boundary: Boundary::Upper, .. })
        ));
        assert!(matches!(
            hp.invert(lim.lower - 0.1),
            Err(Error::Range { boundary: Boundary::Lower, .. })
        ));
        let hp = HazardPotential::new(TypeDistribution::uniform01(), 0.5).unwrap();
        assert!(matches!(
            hp.invert(hp.limits().upper + 1e-3),
            Err(Error::Range { boundary: Boundary::Upper, .. })
        ));
    }

    #[test]
    fn boundary_limit_examples() {
        let lim = HazardPotential::new(exp1(), 1.0).unwrap().limits();
        assert!(lim.lower_divergent && lim.upper_divergent);
        let lim = HazardPotential::new(exp1(), 1.0).unwrap().numeric_limits();
        assert!(lim.lower_divergent && lim.upper_divergent);

        let hp = HazardPotential::with_reference(pareto11(), 2.0, 1.0).unwrap();
        let lim = hp.limits();
        assert!(!lim.lower_divergent && !lim.upper_divergent);
        assert!((lim.lower - (0.5 - 1.0)).abs() < 1e-15);
        let num = hp.numeric_limits();
        assert!(!num.lower_divergent && !num.upper_divergent);
        assert!((num.lower - lim.lower).abs() < 1e-9);
        assert!((num.upper - lim.upper).abs() < 1e-9);

        let u = TypeDistribution::uniform01();
        let hp = HazardPotential::with_reference(u.clone(), 0.5, 0.5).unwrap();
        let lim = hp.limits();
        assert!(!lim.upper_divergent);
        let q = oracle(&u, 0.5, 0.5, 1.0 - 1e-12);
        assert!((lim.upper - q).abs() < 1e-9);
        let num = hp.numeric_limits();
        assert!((num.upper - lim.upper).abs() < 1e-10);
        assert!(num.lower_divergent);
    }

    #[test]
    fn classification() {
        let c = |d: TypeDistribution| HazardPotential::new(d, 1.0).unwrap().classify().unwrap();
        assert_eq!(c(exp1()), Case::A);
        assert_eq!(c(TypeDistribution::uniform01()), Case::A);
        assert_eq!(c(pareto11()), Case::B);
        assert!(HazardPotential::new(exp1(), 0.5).unwrap().classify().is_err());
    }

    #[test]
    fn tabulated_limits_follow_the_density_at_the_bottom() {
        // density positive at 0: ∫ f/x diverges
        let flat: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64 / 10.0, i as f64 / 10.0)).collect();
        let hp = HazardPotential::new(TypeDistribution::tabulated(&flat).unwrap(), 1.0).unwrap();
        let lim = hp.limits();
        assert!(lim.lower_divergent && lim.upper_divergent);
        assert_eq!(hp.classify().unwrap(), Case::A);
        // support bounded away from zero: finite lower limit
        let shifted: Vec<(f64, f64)> = (0..=10).map(|i| (1.0 + i as f64 / 10.0, i as f64 / 10.0)).collect();
        let hp = HazardPotential::new(TypeDistribution::tabulated(&shifted).unwrap(), 1.0).unwrap();
        let lim = hp.limits();
        assert!(!lim.lower_divergent);
        // ∫ dx / (x (2 − x)) = ½ ln(x / (2 − x))
        assert!((lim.lower + 0.5 * 3f64.ln()).abs() < 1e-8, "{}", lim.lower);
        assert_eq!(hp.classify().unwrap(), Case::B);
    }

    #[test]
    fn tabulated_inversion() {
        let shifted: Vec<(f64, f64)> = (0..=10).map(|i| (1.0 + i as f64 / 10.0, i as f64 / 10.0)).collect();
        let hp = HazardPotential::new(TypeDistribution::tabulated(&shifted).unwrap(), 0.8).unwrap();
        for &t in &[1.01, 1.3, 1.77, 1.999] {
            let y = hp.eval(t).unwrap();
            assert!((hp.invert(y).unwrap() - t).abs() < 1e-9);
        }
    }

    fn dists() -> Vec<TypeDistribution> {
        vec![exp1(), TypeDistribution::uniform01(), TypeDistribution::pareto(1.0, 1.5).unwrap()]
    }

    proptest! {
        #[test]
        fn invert_eval_round_trip(which in 0usize..3, di in 0usize..3, p in 0.01f64..0.99) {
            let delta = [1.0, 0.9, 0.5][di];
            let d = dists()[which].clone();
            let t = d.quantile(p).unwrap();
            let hp = HazardPotential::new(d, delta).unwrap();
            let y = hp.eval(t).unwrap();
            let back = hp.invert(y).unwrap();
            prop_assert!((back - t).abs() <= 1e-8 * t, "{t} {back}");
            prop_assert!((hp.eval(back).unwrap() - y).abs() <= 1e-10);
        }

        #[test]
        fn potential_grows_with_delta_above_reference(which in 0usize..3, p in 0.5f64..0.99, d1 in 0.0f64..1.0, d2 in 0.0f64..1.0) {
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            let d = dists()[which].clone();
            let t = d.quantile(p).unwrap();
            let a = HazardPotential::new(d.clone(), lo).unwrap().eval(t).unwrap();
            let b = HazardPotential::new(d, hi).unwrap().eval(t).unwrap();
            prop_assert!(a <= b + 1e-12);
        }

        #[test]
        fn closed_forms_agree_with_defining_integral(which in 0usize..3, p in 0.02f64..0.98) {
            let d = dists()[which].clone();
            let t = d.quantile(p).unwrap();
            let hp = HazardPotential::new(d.clone(), 1.0).unwrap();
            let q = oracle(&d, 1.0, hp.reference(), t);
            prop_assert!((hp.eval(t).unwrap() - q).abs() < 1e-9);
        }
    }

    #[test]
    fn perturbed_limits_are_finite_and_bounded() {
        for d in dists() {
            let r = d.median();
            for &delta in &[0.5, 0.9, 0.99] {
                let hp = HazardPotential::new(d.clone(), delta).unwrap();
                let lim = hp.limits();
                assert!(!lim.upper_divergent);
                let bound = 1.0 / (r * (1.0 - delta));
                assert!(lim.upper <= bound);
                for k in 1..=8 {
                    let t = d.effective_upper(10f64.powi(-k)).unwrap();
                    let v = hp.eval(t).unwrap();
                    assert!(v <= bound && v <= lim.upper + 1e-9);
                }
            }
        }
    }
}
