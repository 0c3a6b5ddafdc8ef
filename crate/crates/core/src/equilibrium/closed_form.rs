//! Explicit equilibrium families for the three reference distributions.

use super::{Anchor, EquilibriumFamily, Player, StoppingTime};
use crate::dist::TypeDistribution;
use crate::error::{Error, Result};
use crate::potential::HazardPotential;

const UNIFORM_LIMIT_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    /// Exponential(λ) with `k(θ) = γθ`.
    ExpGamma { lambda: f64, gamma: f64 },
    /// Uniform(0, 1) with `k(θ) = γθ / (1 + θ(γ − 1))`.
    UniformGamma { gamma: f64 },
    /// Pareto(θ̲, α) indexed by the highest type conceding at zero.
    ParetoTheta1 { theta_min: f64, alpha: f64, theta1: f64 },
}

impl ClosedForm {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ClosedForm::ExpGamma { lambda, gamma } => {
                if !(lambda > 0.0 && gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "exponential family needs lambda > 0 and gamma > 0".into(),
                    ));
                }
            }
            ClosedForm::UniformGamma { gamma } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::InvalidParameter("uniform family needs gamma > 0".into()));
                }
            }
            ClosedForm::ParetoTheta1 {
                theta_min,
                alpha,
                theta1,
            } => {
                if !(theta_min > 0.0 && alpha > 0.0 && theta1 >= theta_min && theta1.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "pareto family needs theta_min > 0, alpha > 0, theta1 >= theta_min".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn dist(&self) -> TypeDistribution {
        match *self {
            ClosedForm::ExpGamma { lambda, .. } => TypeDistribution::exponential(lambda).expect("validated"),
            ClosedForm::UniformGamma { .. } => TypeDistribution::uniform01(),
            ClosedForm::ParetoTheta1 { theta_min, alpha, .. } => {
                TypeDistribution::pareto(theta_min, alpha).expect("validated")
            }
        }
    }

    /// `b = (θ̲₁ − θ̲) / (θ̲₁ θ̲)` of the Pareto family.
    fn pareto_b(theta_min: f64, theta1: f64) -> f64 {
        (theta1 - theta_min) / (theta1 * theta_min)
    }

    /// The integration constant of the family.
    pub fn c(&self) -> f64 {
        match *self {
            ClosedForm::ExpGamma { lambda, gamma } => -lambda * gamma.ln(),
            ClosedForm::UniformGamma { gamma } => -gamma.ln(),
            ClosedForm::ParetoTheta1 {
                theta_min,
                alpha,
                theta1,
            } => alpha * (1.0 / theta_min - 1.0 / theta1),
        }
    }

    pub fn anchor(&self) -> Anchor {
        match *self {
            ClosedForm::ParetoTheta1 { theta1, .. } => Anchor::Theta1(theta1),
            _ => Anchor::C(self.c()),
        }
    }

    /// The same equilibrium built through the general hazard-potential machinery.
    pub fn family(&self) -> Result<EquilibriumFamily> {
        self.validate()?;
        EquilibriumFamily::new(HazardPotential::new(self.dist(), 1.0)?, self.anchor())
    }

    pub fn theta1(&self) -> f64 {
        match *self {
            ClosedForm::ParetoTheta1 { theta1, .. } => theta1,
            _ => 0.0,
        }
    }

    pub fn k(&self, theta: f64) -> f64 {
        match *self {
            ClosedForm::ExpGamma { gamma, .. } => gamma * theta,
            ClosedForm::UniformGamma { gamma } => gamma * theta / (1.0 + theta * (gamma - 1.0)),
            ClosedForm::ParetoTheta1 {
                theta_min, theta1, ..
            } => {
                if theta <= theta1 {
                    theta_min
                } else {
                    theta / (1.0 + Self::pareto_b(theta_min, theta1) * theta)
                }
            }
        }
    }

    /// Stopping point of type `theta` for `player`.
    pub fn sigma(&self, theta: f64, player: Player) -> StoppingTime {
        match *self {
            ClosedForm::ExpGamma { lambda, gamma } => {
                let g = match player {
                    Player::One => gamma,
                    Player::Two => 1.0 / gamma,
                };
                StoppingTime::At(lambda * g * theta * theta / 2.0)
            }
            ClosedForm::UniformGamma { gamma } => {
                if theta >= 1.0 {
                    return StoppingTime::Forever;
                }
                let g = match player {
                    Player::One => gamma,
                    Player::Two => 1.0 / gamma,
                };
                let first = if (g - 1.0).abs() < UNIFORM_LIMIT_BAND {
                    -theta
                } else {
                    -(theta * (g - 1.0)).ln_1p() / (g - 1.0)
                };
                StoppingTime::At(first - (-theta).ln_1p())
            }
            ClosedForm::ParetoTheta1 {
                theta_min,
                alpha,
                theta1,
            } => {
                let b = Self::pareto_b(theta_min, theta1);
                if b == 0.0 {
                    return StoppingTime::At(alpha * (theta - theta_min));
                }
                match player {
                    Player::One => {
                        if theta <= theta1 {
                            StoppingTime::At(0.0)
                        } else {
                            StoppingTime::At(alpha / b * ((1.0 + b * theta) / (1.0 + b * theta1)).ln())
                        }
                    }
                    Player::Two => {
                        if theta >= 1.0 / b {
                            StoppingTime::Forever
                        } else {
                            let inner = (1.0 - b * theta) * (1.0 + b * theta1);
                            StoppingTime::At(-alpha / b * inner.ln())
                        }
                    }
                }
            }
        }
    }

    /// Lowest Player-2 type fighting forever, when there is one.
    pub fn player2_forever(&self) -> Option<f64> {
        match *self {
            ClosedForm::ParetoTheta1 {
                theta_min, theta1, ..
            } if theta1 > theta_min => Some(theta1 * theta_min / (theta1 - theta_min)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{integrate, QuadConfig};

    /// Stopping point from the defining integral `∫ k f / (1 − F)` with the
    /// closed-form `k`, independent of the antiderivatives above.
    fn sigma1_by_quadrature(cf: &ClosedForm, theta: f64) -> f64 {
        let d = cf.dist();
        integrate(
            |t| cf.k(t) * d.pdf(t).unwrap() / d.survival(t).unwrap(),
            cf.theta1(),
            theta,
            &QuadConfig::default(),
        )
        .value
    }

    #[test]
    fn figure_examples() {
        let e = ClosedForm::ExpGamma { lambda: 1.0, gamma: 1.0 / 3.0 };
        assert!((e.sigma(2.0, Player::One).as_f64() - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.sigma(2.0, Player::Two).as_f64() - 6.0).abs() < 1e-14);
        assert_eq!(e.sigma(0.0, Player::One), StoppingTime::At(0.0));
        assert!((e.c() - 3f64.ln()).abs() < 1e-15);

        let p = ClosedForm::ParetoTheta1 { theta_min: 1.0, alpha: 1.0, theta1: 2.0 };
        assert!((p.sigma(3.0, Player::One).as_f64() - 2.0 * 1.25f64.ln()).abs() < 1e-15);
        assert!((p.sigma(1.5, Player::Two).as_f64() - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(p.sigma(2.0, Player::Two), StoppingTime::Forever);
        assert_eq!(p.sigma(1.5, Player::One), StoppingTime::At(0.0));
        assert_eq!(p.player2_forever(), Some(2.0));
        assert!((p.c() - 0.5).abs() < 1e-15);

        let u = ClosedForm::UniformGamma { gamma: 2.0 };
        let v = u.sigma(0.5, Player::One).as_f64();
        assert!((v - (2f64.ln() - 1.5f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn uniform_symmetric_limit() {
        let u = ClosedForm::UniformGamma { gamma: 1.0 };
        let v = u.sigma(0.5, Player::One).as_f64();
        assert!((v - (-0.5 + 2f64.ln())).abs() < 1e-15);
        assert!((v - 0.19315).abs() < 1e-5);
        // just outside the band the explicit formula is continuous with the limit
        let near = ClosedForm::UniformGamma { gamma: 1.0 + 2e-6 }.sigma(0.5, Player::One).as_f64();
        assert!((near - v).abs() < 1e-6);
    }

    #[test]
    fn antiderivatives_match_quadrature() {
        let cases = [
            ClosedForm::ExpGamma { lambda: 1.0, gamma: 1.0 / 3.0 },
            ClosedForm::ExpGamma { lambda: 2.5, gamma: 1.7 },
            ClosedForm::UniformGamma { gamma: 2.0 },
            ClosedForm::UniformGamma { gamma: 0.4 },
            ClosedForm::ParetoTheta1 { theta_min: 1.0, alpha: 1.0, theta1: 2.0 },
            ClosedForm::ParetoTheta1 { theta_min: 0.5, alpha: 2.5, theta1: 0.8 },
        ];
        for cf in cases {
            let d = cf.dist();
            for p in [0.1, 0.5, 0.9, 0.99] {
                let t = d.quantile(p).unwrap().max(cf.theta1() + 1e-3);
                let q = sigma1_by_quadrature(&cf, t);
                assert!((cf.sigma(t, Player::One).as_f64() - q).abs() < 1e-10 * (1.0 + q), "{cf:?} {t}");
            }
        }
    }

    #[test]
    fn player_two_composes_with_k() {
        let cases = [
            ClosedForm::ExpGamma { lambda: 1.3, gamma: 0.6 },
            ClosedForm::UniformGamma { gamma: 3.0 },
            ClosedForm::ParetoTheta1 { theta_min: 1.0, alpha: 1.5, theta1: 1.4 },
        ];
        for cf in cases {
            for t in [0.3, 0.6, 0.9, 1.5, 2.5, 4.0] {
                if !cf.dist().support().contains_open(t) || t <= cf.theta1() {
                    continue;
                }
                let s1 = cf.sigma(t, Player::One).as_f64();
                let s2 = cf.sigma(cf.k(t), Player::Two).as_f64();
                assert!((s1 - s2).abs() < 1e-12 * (1.0 + s1), "{cf:?} {t}");
            }
        }
    }

    #[test]
    fn constants_match_the_potential() {
        let cases = [
            ClosedForm::ExpGamma { lambda: 1.3, gamma: 0.6 },
            ClosedForm::UniformGamma { gamma: 3.0 },
            ClosedForm::ParetoTheta1 { theta_min: 1.0, alpha: 1.5, theta1: 1.4 },
        ];
        for cf in cases {
            let fam = cf.family().unwrap();
            assert!((fam.c() - cf.c()).abs() < 1e-12);
            for p in [0.2, 0.5, 0.8] {
                let t = cf.dist().quantile(p).unwrap();
                if t <= cf.theta1() {
                    continue;
                }
                assert!((fam.k(t).unwrap() - cf.k(t)).abs() < 1e-12 * t);
            }
        }
    }
}
