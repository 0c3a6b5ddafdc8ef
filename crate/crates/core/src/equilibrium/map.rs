use super::EquilibriumFamily;
use crate::error::{Boundary, Error, Result};
use crate::numeric::interp::pchip_slopes;
use crate::numeric::ode::{self, OdeConfig};
use crate::numeric::Hermite;

/// Tabulated `k` with Hermite interpolation between nodes. Outside the nodes
/// it defers to the family's exact inversion.
#[derive(Debug, Clone)]
pub struct TypeToTypeMap {
    family: EquilibriumFamily,
    curve: Hermite,
    truncated_at: Option<f64>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidParameter("a map needs at least two grid points".into()));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) || grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// ODE slopes at the nodes, with monotone estimates where the right-hand
/// side is not finite (at the lower boundary of the partner's support).
fn node_slopes(family: &EquilibriumFamily, thetas: &[f64], ks: &[f64]) -> Vec<f64> {
    let fallback = pchip_slopes(thetas, ks);
    thetas
        .iter()
        .zip(ks)
        .zip(fallback)
        .map(|((&t, &k), fb)| {
            let s = family.rhs(t, k);
            if s.is_finite() && t > family.theta1() {
                s
            } else {
                fb
            }
        })
        .collect()
}

impl TypeToTypeMap {
    /// `k` at each grid point by inverting the potential. The map is cut at
    /// the first point whose partner would lie above the support, or where the
    /// partner stops increasing because the potential is flat to rounding.
    pub fn from_inversion(family: EquilibriumFamily, grid: &[f64]) -> Result<Self> {
        check_grid(grid)?;
        let mut thetas = Vec::with_capacity(grid.len());
        let mut ks = Vec::with_capacity(grid.len());
        let mut truncated_at = None;
        for &t in grid {
            match family.k(t) {
                Ok(k) if ks.last().is_some_and(|&p| k <= p) => {
                    log::debug!("partner of {t} no longer increases; map cut there");
                    truncated_at = thetas.last().copied();
                    break;
                }
                Ok(k) => {
                    thetas.push(t);
                    ks.push(k);
                }
                Err(Error::PartnerOutOfSupport {
                    boundary: Boundary::Upper,
                    ..
                }) => {
                    truncated_at = thetas.last().copied();
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        check_grid(&thetas)?;
        let ds = node_slopes(&family, &thetas, &ks);
        Ok(Self {
            curve: Hermite::new(thetas, ks, ds),
            family,
            truncated_at,
        })
    }

    /// Integrates `k' = Λ'(θ)/Λ'(k)` from `(theta_start, k_start)` in both
    /// directions through `grid`. If the solution leaves the support the map
    /// is cut at the last grid point reached.
    pub fn solve_k_ode(
        family: EquilibriumFamily,
        theta_start: f64,
        k_start: f64,
        grid: &[f64],
    ) -> Result<Self> {
        Self::solve_k_ode_with(family, theta_start, k_start, grid, &OdeConfig::default())
    }

    pub fn solve_k_ode_with(
        family: EquilibriumFamily,
        theta_start: f64,
        k_start: f64,
        grid: &[f64],
        cfg: &OdeConfig,
    ) -> Result<Self> {
        check_grid(grid)?;
        let support = family.dist().support();
        if !support.contains_open(theta_start) || !support.contains_open(k_start) {
            return Err(Error::InvalidParameter(format!(
                "ODE start ({theta_start}, {k_start}) must be strictly inside the support"
            )));
        }
        let rhs = |x: f64, y: f64| family.rhs(x, y);
        let inside = |x: f64, y: f64| support.contains_open(x) && support.contains_open(y);

        let split = grid.partition_point(|&x| x < theta_start);
        let backward: Vec<f64> = grid[..split].iter().rev().copied().collect();
        let forward: Vec<f64> = grid[split..].to_vec();

        let back = ode::integrate(rhs, inside, theta_start, k_start, &backward, cfg);
        let fwd = ode::integrate(rhs, inside, theta_start, k_start, &forward, cfg);
        if back.stop.is_some() {
            log::debug!("backward k ODE stopped near {} ({:?})", back.last_x, back.stop);
        }

        let n_back = back.values.len();
        let mut thetas: Vec<f64> = backward[..n_back].iter().rev().copied().collect();
        let mut ks: Vec<f64> = back.values.iter().rev().copied().collect();
        thetas.extend_from_slice(&forward[..fwd.values.len()]);
        ks.extend_from_slice(&fwd.values);
        let truncated_at = fwd.stop.map(|s| {
            log::debug!("forward k ODE stopped at {} ({s:?})", fwd.last_x);
            thetas.last().copied().unwrap_or(theta_start)
        });
        check_grid(&thetas)?;
        let ds = node_slopes(&family, &thetas, &ks);
        Ok(Self {
            curve: Hermite::new(thetas, ks, ds),
            family,
            truncated_at,
        })
    }

    /// Arbitrary tabulated values, interpolated with monotone slopes.
    pub fn from_values(family: EquilibriumFamily, thetas: Vec<f64>, ks: Vec<f64>) -> Result<Self> {
        check_grid(&thetas)?;
        if thetas.len() != ks.len() {
            return Err(Error::InvalidParameter("thetas and ks differ in length".into()));
        }
        Ok(Self {
            curve: Hermite::pchip(thetas, ks),
            family,
            truncated_at: None,
        })
    }

    pub fn family(&self) -> &EquilibriumFamily {
        &self.family
    }

    pub fn thetas(&self) -> &[f64] {
        self.curve.xs()
    }

    pub fn ks(&self) -> &[f64] {
        self.curve.ys()
    }

    pub fn slopes(&self) -> &[f64] {
        self.curve.slopes()
    }

    pub fn curve(&self) -> &Hermite {
        &self.curve
    }

    /// Last grid type for which the map is defined, if it was cut short.
    pub fn truncated_at(&self) -> Option<f64> {
        self.truncated_at
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.curve.is_strictly_increasing()
    }

    pub fn eval(&self, theta: f64) -> Result<f64> {
        if theta >= self.curve.first_x() && theta <= self.curve.last_x() {
            Ok(self.curve.eval(theta))
        } else {
            self.family.k(theta)
        }
    }

    /// Largest node-wise difference from another map on the same grid.
    pub fn sup_diff(&self, other: &TypeToTypeMap) -> f64 {
        self.ks()
            .iter()
            .zip(other.ks())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
