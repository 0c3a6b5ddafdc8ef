//! Type distributions on an open interval `(θ̲, θ̄)` with `θ̄` possibly infinite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Hermite;

/// Upper end of a support. Infinity is a variant so comparisons stay exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Upper {
    Finite(f64),
    Infinite,
}

impl Upper {
    pub fn is_finite(self) -> bool {
        matches!(self, Upper::Finite(_))
    }

    /// `f64::INFINITY` for the infinite variant.
    pub fn as_f64(self) -> f64 {
        match self {
            Upper::Finite(v) => v,
            Upper::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lower: f64,
    pub upper: Upper,
}

impl Support {
    pub fn contains_closed(&self, x: f64) -> bool {
        x >= self.lower && x.is_finite() && x <= self.upper.as_f64()
    }

    pub fn contains_open(&self, x: f64) -> bool {
        x > self.lower && x < self.upper.as_f64()
    }

    fn domain_error(&self, x: f64) -> Error {
        Error::Domain {
            x,
            lower: self.lower,
            upper: self.upper.as_f64(),
        }
    }
}

/// JSON-facing description of a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistSpec {
    Exponential {
        lambda: f64,
    },
    Uniform01,
    Pareto {
        theta_min: f64,
        alpha: f64,
    },
    Tabulated {
        points: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Exponential { lambda: f64 },
    Uniform01,
    Pareto { theta_min: f64, alpha: f64 },
    Tabulated(Tabulated),
}

/// Monotone cubic interpolant of a tabulated cdf; the pdf is its derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    curve: Hermite,
}

impl Tabulated {
    const END_TOL: f64 = 1e-10;

    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter(
                "tabulated distribution needs at least two points".into(),
            ));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let mut fs: Vec<f64> = points.iter().map(|p| p.1).collect();
        if xs.iter().chain(&fs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("tabulated points must be finite".into()));
        }
        if xs[0] < 0.0 {
            return Err(Error::InvalidParameter("types must be nonnegative".into()));
        }
        if !xs.windows(2).all(|w| w[0] < w[1]) || !fs.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "tabulated theta and cdf values must both be strictly increasing".into(),
            ));
        }
        let last = fs.len() - 1;
        if fs[0].abs() > Self::END_TOL || (fs[last] - 1.0).abs() > Self::END_TOL {
            return Err(Error::InvalidParameter(format!(
                "tabulated cdf must start at 0 and end at 1 (within {:e}), got {} and {}",
                Self::END_TOL,
                fs[0],
                fs[last]
            )));
        }
        fs[0] = 0.0;
        fs[last] = 1.0;
        Ok(Self {
            curve: Hermite::pchip(xs, fs),
        })
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.curve
            .xs()
            .iter()
            .copied()
            .zip(self.curve.ys().iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeDistribution {
    family: Family,
    support: Support,
}

impl TypeDistribution {
    pub fn exponential(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self {
            family: Family::Exponential { lambda },
            support: Support {
                lower: 0.0,
                upper: Upper::Infinite,
            },
        })
    }

    pub fn uniform01() -> Self {
        Self {
            family: Family::Uniform01,
            support: Support {
                lower: 0.0,
                upper: Upper::Finite(1.0),
            },
        }
    }

    pub fn pareto(theta_min: f64, alpha: f64) -> Result<Self> {
        if !(theta_min > 0.0 && theta_min.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "theta_min must be positive, got {theta_min}"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self {
            family: Family::Pareto { theta_min, alpha },
            support: Support {
                lower: theta_min,
                upper: Upper::Infinite,
            },
        })
    }

    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        let tab = Tabulated::new(points)?;
        let support = Support {
            lower: tab.curve.first_x(),
            upper: Upper::Finite(tab.curve.last_x()),
        };
        Ok(Self {
            family: Family::Tabulated(tab),
            support,
        })
    }

    pub fn from_spec(spec: &DistSpec) -> Result<Self> {
        match spec {
            DistSpec::Exponential { lambda } => Self::exponential(*lambda),
            DistSpec::Uniform01 => Ok(Self::uniform01()),
            DistSpec::Pareto { theta_min, alpha } => Self::pareto(*theta_min, *alpha),
            DistSpec::Tabulated { points } => Self::tabulated(points),
        }
    }

    pub fn spec(&self) -> DistSpec {
        match &self.family {
            Family::Exponential { lambda } => DistSpec::Exponential { lambda: *lambda },
            Family::Uniform01 => DistSpec::Uniform01,
            Family::Pareto { theta_min, alpha } => DistSpec::Pareto {
                theta_min: *theta_min,
                alpha: *alpha,
            },
            Family::Tabulated(t) => DistSpec::Tabulated { points: t.points() },
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn lower(&self) -> f64 {
        self.support.lower
    }

    pub fn upper(&self) -> Upper {
        self.support.upper
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !self.support.contains_closed(x) {
            return Err(self.support.domain_error(x));
        }
        Ok(self.cdf_unchecked(x))
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !self.support.contains_closed(x) {
            return Err(self.support.domain_error(x));
        }
        Ok(self.pdf_unchecked(x))
    }

    /// `1 − F(x)`, computed without cancellation for the closed-form families.
    pub fn survival(&self, x: f64) -> Result<f64> {
        if !self.support.contains_closed(x) {
            return Err(self.support.domain_error(x));
        }
        Ok(self.survival_unchecked(x))
    }

    pub fn hazard(&self, x: f64) -> Result<f64> {
        if !self.support.contains_open(x) {
            return Err(self.support.domain_error(x));
        }
        if self.cdf_unchecked(x) >= 1.0 - 1e-14 {
            return Err(Error::NearBoundary { x });
        }
        Ok(self.hazard_unchecked(x))
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("probability {p} not in [0, 1]")));
        }
        if p == 1.0 {
            return match self.support.upper {
                Upper::Finite(u) => Ok(u),
                Upper::Infinite => Err(Error::InvalidParameter(
                    "quantile(1) is infinite for an unbounded support".into(),
                )),
            };
        }
        Ok(match &self.family {
            Family::Exponential { lambda } => -(-p).ln_1p() / lambda,
            Family::Uniform01 => p,
            Family::Pareto { theta_min, alpha } => theta_min * (1.0 - p).powf(-1.0 / alpha),
            Family::Tabulated(t) => t.curve.inverse(p).expect("p within [0, 1]"),
        })
    }

    /// Type whose survival probability is `tail_mass`, i.e. the `1 − tail_mass` quantile.
    pub fn effective_upper(&self, tail_mass: f64) -> Result<f64> {
        if !(tail_mass > 0.0 && tail_mass < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tail mass must lie in (0, 1), got {tail_mass}"
            )));
        }
        Ok(match &self.family {
            Family::Exponential { lambda } => -tail_mass.ln() / lambda,
            Family::Uniform01 => 1.0 - tail_mass,
            Family::Pareto { theta_min, alpha } => theta_min * tail_mass.powf(-1.0 / alpha),
            Family::Tabulated(t) => t.curve.inverse(1.0 - tail_mass).expect("inside [0, 1]"),
        })
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5).expect("0.5 is a valid probability")
    }

    pub fn mean(&self) -> Option<f64> {
        match &self.family {
            Family::Exponential { lambda } => Some(1.0 / lambda),
            Family::Uniform01 => Some(0.5),
            Family::Pareto { theta_min, alpha } => {
                (*alpha > 1.0).then(|| alpha * theta_min / (alpha - 1.0))
            }
            Family::Tabulated(t) => {
                // E[θ] = θ̲ + ∫ S over the support
                let (a, b) = (t.curve.first_x(), t.curve.last_x());
                let s = crate::numeric::integrate(
                    |x| 1.0 - t.curve.eval(x),
                    a,
                    b,
                    &crate::numeric::QuadConfig::default(),
                );
                Some(a + s.value)
            }
        }
    }

    pub(crate) fn cdf_unchecked(&self, x: f64) -> f64 {
        match &self.family {
            Family::Exponential { lambda } => -(-lambda * x).exp_m1(),
            Family::Uniform01 => x,
            Family::Pareto { theta_min, alpha } => -(alpha * (theta_min / x).ln()).exp_m1(),
            Family::Tabulated(t) => t.curve.eval(x).clamp(0.0, 1.0),
        }
    }

    pub(crate) fn survival_unchecked(&self, x: f64) -> f64 {
        match &self.family {
            Family::Exponential { lambda } => (-lambda * x).exp(),
            Family::Uniform01 => 1.0 - x,
            Family::Pareto { theta_min, alpha } => (theta_min / x).powf(*alpha),
            Family::Tabulated(t) => (1.0 - t.curve.eval(x)).clamp(0.0, 1.0),
        }
    }

    pub(crate) fn pdf_unchecked(&self, x: f64) -> f64 {
        match &self.family {
            Family::Exponential { lambda } => lambda * (-lambda * x).exp(),
            Family::Uniform01 => 1.0,
            Family::Pareto { theta_min, alpha } => alpha / x * (theta_min / x).powf(*alpha),
            Family::Tabulated(t) => t.curve.derivative(x).max(0.0),
        }
    }

    /// Hazard without the near-boundary guard; may be infinite at a finite top.
    pub(crate) fn hazard_unchecked(&self, x: f64) -> f64 {
        match &self.family {
            Family::Exponential { lambda } => *lambda,
            Family::Uniform01 => 1.0 / (1.0 - x),
            Family::Pareto { alpha, .. } => alpha / x,
            Family::Tabulated(_) => self.pdf_unchecked(x) / self.survival_unchecked(x),
        }
    }
}
