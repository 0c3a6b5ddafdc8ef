//! Equilibrium families indexed by the integration constant `C` or by the
//! highest type conceding at zero.

mod admissible;
mod closed_form;
mod grid;
mod map;
mod strategy;

use std::sync::Arc;

use serde::Serialize;

pub use admissible::{check_admissible, AdmissibilityReport};
pub use closed_form::ClosedForm;
pub use grid::{merge_points, type_grid};
pub use map::TypeToTypeMap;
pub use strategy::{Solution, StrategyCurve};

use crate::dist::{TypeDistribution, Upper};
use crate::error::{Boundary, Error, Result};
use crate::potential::{Case, HazardPotential};

/// A stopping point; fighting forever is its own variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingTime {
    At(f64),
    Forever,
}

/// Serialized as a number, or the string `"forever"`.
impl Serialize for StoppingTime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            StoppingTime::At(a) => s.serialize_f64(*a),
            StoppingTime::Forever => s.serialize_str("forever"),
        }
    }
}

impl StoppingTime {
    pub fn finite(self) -> Option<f64> {
        match self {
            StoppingTime::At(a) => Some(a),
            StoppingTime::Forever => None,
        }
    }

    pub fn is_forever(self) -> bool {
        self == StoppingTime::Forever
    }

    /// `f64::INFINITY` for `Forever`.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Player {
    One,
    Two,
}

/// How a family is pinned down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    /// The integration constant itself.
    C(f64),
    /// The highest Player-1 type that concedes at zero.
    Theta1(f64),
}

#[derive(Debug, Clone)]
pub struct EquilibriumFamily {
    hp: HazardPotential,
    c: f64,
    theta1: f64,
    case: Case,
}

impl EquilibriumFamily {
    /// Builds the family in which Player 1 holds any mass at zero. Negative `C`
    /// is only meaningful with a divergent lower limit; otherwise the caller
    /// must swap player labels.
    pub fn new(hp: HazardPotential, anchor: Anchor) -> Result<Self> {
        let lim = hp.limits();
        let lower = hp.dist().lower();
        let case = if lim.lower_divergent { Case::A } else { Case::B };
        let (c, theta1) = match (case, anchor) {
            (_, Anchor::C(c)) if !c.is_finite() => {
                return Err(Error::InvalidParameter(format!("C must be finite, got {c}")))
            }
            (Case::A, Anchor::C(c)) => (c, lower),
            (Case::A, Anchor::Theta1(_)) => {
                return Err(Error::InvalidParameter(
                    "the lower limit of the potential diverges, so no type concedes at zero; \
                     index the family by C instead"
                        .into(),
                ))
            }
            (Case::B, Anchor::C(c)) if c < 0.0 => {
                return Err(Error::Range {
                    value: c,
                    boundary: Boundary::Lower,
                    limit: 0.0,
                })
            }
            (Case::B, Anchor::C(c)) if c == 0.0 => (0.0, lower),
            (Case::B, Anchor::C(c)) => {
                let theta1 = hp.invert(lim.lower + c)?;
                (c, theta1)
            }
            (Case::B, Anchor::Theta1(t)) if t == lower => (0.0, lower),
            (Case::B, Anchor::Theta1(t)) => {
                let c = hp.eval(t)? - lim.lower;
                (c, t)
            }
        };
        Ok(Self { hp, c, theta1, case })
    }

    pub fn hp(&self) -> &HazardPotential {
        &self.hp
    }

    pub fn dist(&self) -> &TypeDistribution {
        self.hp.dist()
    }

    pub fn dist_arc(&self) -> Arc<TypeDistribution> {
        self.hp.dist_arc()
    }

    pub fn delta(&self) -> f64 {
        self.hp.delta()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn case(&self) -> Case {
        self.case
    }

    fn partner_error(theta: f64, e: Error) -> Error {
        match e {
            Error::Range { boundary, .. } => Error::PartnerOutOfSupport { theta, boundary },
            other => other,
        }
    }

    /// `k(θ) = Λ⁻¹(Λ(θ) − C)`: the Player-2 type stopping when Player 1 type `θ` does.
    pub fn k(&self, theta: f64) -> Result<f64> {
        if theta == self.theta1 {
            return Ok(self.dist().lower());
        }
        if theta < self.theta1 {
            let s = self.dist().support();
            return Err(Error::Domain {
                x: theta,
                lower: self.theta1,
                upper: s.upper.as_f64(),
            });
        }
        if self.c == 0.0 {
            self.hp.eval(theta)?;
            return Ok(theta);
        }
        let y = self.hp.eval(theta)? - self.c;
        self.hp.invert(y).map_err(|e| Self::partner_error(theta, e))
    }

    /// `k⁻¹(y)`, or `None` when no Player-1 type is matched with `y`.
    pub fn k_inverse(&self, y: f64) -> Result<Option<f64>> {
        if y == self.dist().lower() {
            return Ok(Some(self.theta1));
        }
        if self.c == 0.0 {
            self.hp.eval(y)?;
            return Ok(Some(y));
        }
        match self.hp.invert(self.hp.eval(y)? + self.c) {
            Ok(x) => Ok(Some(x)),
            Err(Error::Range {
                boundary: Boundary::Upper,
                ..
            }) => Ok(None),
            Err(e) => Err(Self::partner_error(y, e)),
        }
    }

    /// ODE right-hand side `k' = Λ'(θ) / Λ'(k)`.
    pub fn rhs(&self, theta: f64, k: f64) -> f64 {
        self.hp.integrand(theta) / self.hp.integrand(k)
    }

    /// Lowest Player-2 type that fights forever.
    pub fn player2_forever(&self) -> Result<Upper> {
        let lim = self.hp.limits();
        if self.c > 0.0 && !lim.upper_divergent {
            return Ok(Upper::Finite(self.hp.invert(lim.upper - self.c)?));
        }
        Ok(Upper::Infinite)
    }

    /// Lowest Player-1 type that fights forever.
    pub fn player1_forever(&self) -> Result<Upper> {
        let lim = self.hp.limits();
        if self.c < 0.0 && !lim.upper_divergent {
            return Ok(Upper::Finite(self.hp.invert(lim.upper + self.c)?));
        }
        Ok(Upper::Infinite)
    }

    /// Type-to-type map on `grid` built by inverting the potential.
    pub fn map(&self, grid: &[f64]) -> Result<TypeToTypeMap> {
        TypeToTypeMap::from_inversion(self.clone(), grid)
    }

    /// Type-to-type map on `grid` by integrating the ODE from the first grid
    /// point, whose partner comes from the inversion path.
    pub fn ode_map(&self, grid: &[f64]) -> Result<TypeToTypeMap> {
        let start = *grid
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty grid".into()))?;
        let k0 = self.k(start)?;
        TypeToTypeMap::solve_k_ode(self.clone(), start, k0, grid)
    }

    /// Map, both strategies, on a grid of about `n` types up to the `1 − tail`
    /// quantile. Player 1's grid is extended so that Player 2's schedule is
    /// tabulated up to the same quantile.
    pub fn solve(&self, n: usize, tail: f64) -> Result<Solution> {
        let mut grid = type_grid(self.dist(), self.theta1, n, tail)?;
        let top = *grid.last().unwrap();
        let reach = match self.k(top) {
            Ok(k) => k,
            Err(Error::PartnerOutOfSupport { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let grid2 = type_grid(self.dist(), self.dist().lower(), n, tail)?;
        let mut extra = Vec::new();
        for &y in grid2.iter().filter(|&&y| y > reach) {
            match self.k_inverse(y)? {
                Some(x) if x.is_finite() && x > top => extra.push(x),
                Some(_) => {}
                None => break,
            }
        }
        merge_points(&mut grid, &extra);
        Solution::from_map(self.map(&grid)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(d: TypeDistribution, anchor: Anchor) -> EquilibriumFamily {
        EquilibriumFamily::new(HazardPotential::new(d, 1.0).unwrap(), anchor).unwrap()
    }

    #[test]
    fn k_examples() {
        let e = fam(TypeDistribution::exponential(1.0).unwrap(), Anchor::C(3f64.ln()));
        assert!((e.k(2.0).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        assert_eq!(e.case(), Case::A);
        assert_eq!(e.theta1(), 0.0);

        let u = fam(TypeDistribution::uniform01(), Anchor::C(0.0));
        let top = TypeDistribution::uniform01().effective_upper(1e-6).unwrap();
        assert_eq!(u.k(0.7 * top).unwrap(), 0.7 * top);

        let p = fam(TypeDistribution::pareto(1.0, 1.0).unwrap(), Anchor::Theta1(2.0));
        assert!((p.c() - 0.5).abs() < 1e-15);
        assert_eq!(p.k(2.0).unwrap(), 1.0);
        assert!((p.k(2.0 + 1e-9).unwrap() - 1.0).abs() < 1e-8);
        assert!(matches!(p.k(1.5), Err(Error::Domain { .. })));
    }

    #[test]
    fn anchors_agree_in_case_b() {
        let d = TypeDistribution::pareto(1.0, 1.0).unwrap();
        let by_c = fam(d.clone(), Anchor::C(0.5));
        assert!((by_c.theta1() - 2.0).abs() < 1e-12);
        let zero = fam(d.clone(), Anchor::C(0.0));
        assert_eq!(zero.theta1(), 1.0);
        let hp = HazardPotential::new(d, 1.0).unwrap();
        assert!(matches!(
            EquilibriumFamily::new(hp.clone(), Anchor::C(-0.1)),
            Err(Error::Range { boundary: Boundary::Lower, .. })
        ));
        // C at or beyond Λ̄ − Λ̲ would need θ̲₁ at the top of the support
        let span = hp.limits().upper - hp.limits().lower;
        assert!(EquilibriumFamily::new(hp, Anchor::C(span)).is_err());
    }

    #[test]
    fn case_a_rejects_theta1_anchor() {
        let hp = HazardPotential::new(TypeDistribution::uniform01(), 1.0).unwrap();
        assert!(EquilibriumFamily::new(hp.clone(), Anchor::Theta1(0.2)).is_err());
        // negative C is allowed here; the weaker player is then Player 2
        let f = EquilibriumFamily::new(hp, Anchor::C(-0.3)).unwrap();
        assert!(f.k(0.4).unwrap() > 0.4);
    }

    #[test]
    fn inverse_and_thresholds() {
        let p = fam(TypeDistribution::pareto(1.0, 1.0).unwrap(), Anchor::Theta1(2.0));
        assert_eq!(p.player2_forever().unwrap(), Upper::Finite(2.0));
        assert_eq!(p.player1_forever().unwrap(), Upper::Infinite);
        assert!((p.k_inverse(1.5).unwrap().unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(p.k_inverse(2.5).unwrap(), None);
        let e = fam(TypeDistribution::exponential(1.0).unwrap(), Anchor::C(0.7));
        assert_eq!(e.player2_forever().unwrap(), Upper::Infinite);
    }

    #[test]
    fn partner_out_of_support() {
        let hp = HazardPotential::new(TypeDistribution::uniform01(), 0.5).unwrap();
        let f = EquilibriumFamily::new(hp, Anchor::C(-0.5)).unwrap();
        assert!(matches!(
            f.k(0.999),
            Err(Error::PartnerOutOfSupport { boundary: Boundary::Upper, .. })
        ));
        assert!(matches!(f.player1_forever().unwrap(), Upper::Finite(_)));
    }
}
