//! Perturbed games that discount the winner's payment (parameter `δ`) or add
//! behavioral types who never stop (mass `ε`), and selection experiments
//! that push the perturbation to zero.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{DistSpec, TypeDistribution, Upper};
use crate::equilibrium::{type_grid, Anchor, EquilibriumFamily, StoppingTime, TypeToTypeMap};
use crate::error::{Error, Result};
use crate::numeric::ode::{self, OdeConfig};
use crate::potential::HazardPotential;
use crate::verify::{
    best_response_gap, deviation_grid, expected_payoff, quantile_types, Profile, StoppingTimeDistribution,
};

/// Which perturbation is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PerturbationConfig {
    /// The winner pays `δ` times the loser's stopping time plus `1 − δ` times her own.
    Al { delta: f64 },
    /// Each opponent is, with probability `ε`, a type that never stops.
    Bt { epsilon: f64 },
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Al { delta } if !(0.0..1.0).contains(&delta) => {
                Err(Error::InvalidParameter(format!("delta must lie in [0, 1), got {delta}")))
            }
            Self::Bt { epsilon } if !(epsilon > 0.0 && epsilon <= 1.0) => {
                Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1], got {epsilon}")))
            }
            _ => Ok(()),
        }
    }

    /// `δ` for the discounting game, `1 − ε` for the behavioral one.
    pub fn delta_eff(&self) -> f64 {
        match *self {
            Self::Al { delta } => delta,
            Self::Bt { epsilon } => 1.0 - epsilon,
        }
    }
}

/// Equilibrium family of the perturbed game; AL(δ) and BT(1 − δ) give the same one.
pub fn perturbed_family(
    dist: impl Into<Arc<TypeDistribution>>,
    pc: PerturbationConfig,
    anchor: Anchor,
) -> Result<EquilibriumFamily> {
    pc.validate()?;
    let hp = HazardPotential::new(dist, pc.delta_eff())?;
    EquilibriumFamily::new(hp, anchor)
}

/// Integrates the discounting ODE and the behavioral-types ODE separately over
/// `grid` from the partner of `grid[0]`, and returns the sup-norm of the difference.
pub fn equivalence_check(dist: &TypeDistribution, delta: f64, c: f64, grid: &[f64]) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let start = *grid
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty grid".into()))?;
    let fam = perturbed_family(dist.clone(), PerturbationConfig::Al { delta }, Anchor::C(c))?;
    let k0 = fam.k(start)?;
    let eps = 1.0 - delta;
    let d = dist;
    let al = |x: f64| d.pdf_unchecked(x) / (x * (1.0 - delta * d.cdf_unchecked(x)));
    let bt = |x: f64| d.pdf_unchecked(x) / (x * (1.0 - (1.0 - eps) * d.cdf_unchecked(x)));
    let support = d.support();
    let inside = |x: f64, y: f64| support.contains_open(x) && support.contains_open(y);
    let cfg = OdeConfig {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        ..OdeConfig::default()
    };
    let rest = &grid[1..];
    let a = ode::integrate(|x, y| al(x) / al(y), inside, start, k0, rest, &cfg);
    let b = ode::integrate(|x, y| bt(x) / bt(y), inside, start, k0, rest, &cfg);
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max))
}

/// Knobs shared by the selection experiments.
#[derive(Debug, Clone, Copy)]
pub struct SelectionConfig {
    pub grid: usize,
    pub tail: f64,
    pub n_types: usize,
    pub n_deviations: usize,
    /// deviation step above `ā₁`, relative to `ā₁`
    pub step: f64,
    /// offset below the top of a bounded support where the backward ODE starts
    pub eta: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            grid: 512,
            tail: 1e-6,
            n_types: 32,
            n_deviations: 400,
            step: 1e-3,
            eta: 1e-6,
        }
    }
}

pub const DEFAULT_DELTAS: [f64; 4] = [0.5, 0.9, 0.99, 0.999];

#[derive(Debug, Clone, Serialize)]
pub struct BoundedSelection {
    pub delta: f64,
    pub forced_c: f64,
    /// sup `|k(θ) − θ|` along the backward ODE from `(θ̄ − η, θ̄ − η)`
    pub backward_residual: f64,
}

/// Forces `k(θ̄) = θ̄` in the perturbed integral identity and reads off `C`,
/// then checks that the ODE started just below the top stays on the diagonal.
pub fn bounded_support_selection(dist: &TypeDistribution, delta: f64) -> Result<BoundedSelection> {
    bounded_support_selection_with(dist, delta, &SelectionConfig::default())
}

pub fn bounded_support_selection_with(
    dist: &TypeDistribution,
    delta: f64,
    cfg: &SelectionConfig,
) -> Result<BoundedSelection> {
    let top = match dist.upper() {
        Upper::Finite(t) => t,
        Upper::Infinite => {
            return Err(Error::Precondition(
                "support is unbounded; use unbounded_support_experiment".into(),
            ))
        }
    };
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let hp = HazardPotential::new(dist.clone(), delta)?;
    // ∫_{k(θ̄)}^{θ̄} with k(θ̄) = θ̄
    let forced_c = hp.integral_between(top, top)?;
    let fam = EquilibriumFamily::new(hp, Anchor::C(forced_c))?;
    let start = top - cfg.eta;
    let mut grid = type_grid(dist, dist.lower(), cfg.grid, cfg.tail)?;
    grid.retain(|&x| x < start);
    grid.push(start);
    let map = TypeToTypeMap::solve_k_ode(fam, start, start, &grid)?;
    let backward_residual = map
        .thetas()
        .iter()
        .zip(map.ks())
        .map(|(t, k)| (t - k).abs())
        .fold(0.0, f64::max);
    Ok(BoundedSelection {
        delta,
        forced_c,
        backward_residual,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UnboundedEvidence {
    pub delta: f64,
    #[serde(rename = "C")]
    pub c: f64,
    /// lowest Player-2 type left without a partner; `None` when every type is matched
    pub m_delta: Option<f64>,
    /// supremum of Player 1's stopping times
    pub a_bar_1: f64,
    /// `m_δ / (1 − δ)`
    pub bound: Option<f64>,
    pub step: f64,
    /// largest gain of an unmatched Player-2 type from stopping at `ā₁ + Δ`
    pub gain_at_step: f64,
    /// largest gain of an unmatched Player-2 type over `{ā₁ + Δ}` and a grid on `[0, 2ā₁]`
    pub max_gain: f64,
    pub rows: Vec<DeviationRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationRow {
    pub theta: f64,
    pub assigned: f64,
    pub best_deviation: f64,
    pub gain: f64,
}

/// Measures how Player-2 types above `m_δ` fare when they stop just above `ā₁`.
///
/// Unmatched types have no stopping point in the constructed profile, so they
/// are assigned `ā₁ θ / m_δ`, which beats every Player-1 type and keeps the
/// schedule increasing.
pub fn unbounded_support_experiment(dist: &TypeDistribution, delta: f64, c: f64) -> Result<UnboundedEvidence> {
    unbounded_support_experiment_with(dist, delta, c, &SelectionConfig::default())
}

pub fn unbounded_support_experiment_with(
    dist: &TypeDistribution,
    delta: f64,
    c: f64,
    cfg: &SelectionConfig,
) -> Result<UnboundedEvidence> {
    if dist.upper().is_finite() {
        return Err(Error::Precondition(
            "support is bounded; use bounded_support_selection".into(),
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let fam = perturbed_family(dist.clone(), PerturbationConfig::Al { delta }, Anchor::C(c))?;
    let sol = fam.solve(cfg.grid, cfg.tail)?;
    let a_bar_1 = sol.sigma1.limit();
    let m = match fam.player2_forever()? {
        Upper::Finite(m) => m,
        Upper::Infinite => {
            return Ok(UnboundedEvidence {
                delta,
                c,
                m_delta: None,
                a_bar_1,
                bound: None,
                step: 0.0,
                gain_at_step: 0.0,
                max_gain: 0.0,
                rows: Vec::new(),
            })
        }
    };
    let step = cfg.step * a_bar_1;
    let g1 = StoppingTimeDistribution::new(&sol.sigma1, 0.0)?;

    // unmatched types, geometric in the survival probability from S(m) down to the tail
    let s_m = dist.survival(m)?;
    let n = cfg.n_types;
    let types: Vec<f64> = (1..=n)
        .map(|i| {
            let t = i as f64 / (n + 1) as f64;
            dist.effective_upper(s_m.powf(1.0 - t) * cfg.tail.powf(t))
        })
        .collect::<Result<_>>()?;
    let mut candidates = vec![a_bar_1 + step];
    if a_bar_1 > 0.0 && a_bar_1.is_finite() {
        candidates.extend(deviation_grid(2.0 * a_bar_1, cfg.n_deviations)?);
    }
    let mut rows = Vec::with_capacity(types.len());
    let (mut gain_at_step, mut max_gain) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &theta in &types {
        let assigned = unmatched_schedule(a_bar_1, m, theta);
        let base = expected_payoff(&g1, theta, assigned, delta);
        let at_step = expected_payoff(&g1, theta, StoppingTime::At(a_bar_1 + step), delta) - base;
        let (mut best, mut best_a) = (f64::NEG_INFINITY, 0.0);
        for &a in &candidates {
            let p = expected_payoff(&g1, theta, StoppingTime::At(a), delta);
            if p > best {
                best = p;
                best_a = a;
            }
        }
        gain_at_step = gain_at_step.max(at_step);
        max_gain = max_gain.max(best - base);
        rows.push(DeviationRow {
            theta,
            assigned: assigned.as_f64(),
            best_deviation: best_a,
            gain: best - base,
        });
    }
    Ok(UnboundedEvidence {
        delta,
        c,
        m_delta: Some(m),
        a_bar_1,
        bound: Some(m / (1.0 - delta)),
        step,
        gain_at_step,
        max_gain,
        rows,
    })
}

/// One `(δ, C)` cell of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionCell {
    pub delta: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub m_delta: Option<f64>,
    pub a_bar_1: Option<f64>,
    pub max_gain: Option<f64>,
    #[serde(rename = "forced_C", skip_serializing_if = "Option::is_none")]
    pub forced_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backward_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SelectionCell {
    fn failed(delta: f64, c: f64, e: Error) -> Self {
        Self {
            delta,
            c,
            m_delta: None,
            a_bar_1: None,
            max_gain: None,
            forced_c: None,
            backward_residual: None,
            error: Some(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionExperiment {
    pub dist: DistSpec,
    pub bounded: bool,
    pub deltas: Vec<f64>,
    pub candidates: Vec<f64>,
    pub cells: Vec<SelectionCell>,
}

impl SelectionExperiment {
    /// Every bounded cell forced `C = 0`.
    pub fn unique_zero(&self) -> bool {
        self.bounded && self.cells.iter().all(|c| c.forced_c == Some(0.0))
    }
}

fn bounded_cell(dist: &TypeDistribution, delta: f64, c: f64, cfg: &SelectionConfig) -> Result<SelectionCell> {
    let sel = bounded_support_selection_with(dist, delta, cfg)?;
    let fam = perturbed_family(dist.clone(), PerturbationConfig::Al { delta }, Anchor::C(sel.forced_c))?;
    let sol = fam.solve(cfg.grid, cfg.tail)?;
    let profile = Profile {
        delta,
        ..Profile::from_solution(&sol)
    };
    let types = quantile_types(dist, cfg.n_types, cfg.tail)?;
    let dev = deviation_grid(profile.deviation_span(cfg.tail)?, cfg.n_deviations)?;
    let report = best_response_gap(&profile, &types, &dev)?;
    Ok(SelectionCell {
        delta,
        c,
        m_delta: None,
        a_bar_1: Some(sol.sigma1.limit()),
        max_gain: Some(report.max_gain),
        forced_c: Some(sel.forced_c),
        backward_residual: Some(sel.backward_residual),
        error: None,
    })
}

fn unbounded_cell(dist: &TypeDistribution, delta: f64, c: f64, cfg: &SelectionConfig) -> Result<SelectionCell> {
    let ev = unbounded_support_experiment_with(dist, delta, c, cfg)?;
    Ok(SelectionCell {
        delta,
        c,
        m_delta: ev.m_delta,
        a_bar_1: Some(ev.a_bar_1),
        max_gain: Some(ev.max_gain),
        forced_c: None,
        backward_residual: None,
        error: None,
    })
}

/// Runs one experiment per `(δ, C)` pair, in parallel, reporting cells in
/// δ-major order. Failed cells carry their error instead of being dropped.
/// On a bounded support an empty candidate set means `C = 0`.
pub fn selection_sweep(
    dist: &TypeDistribution,
    deltas: &[f64],
    candidates: &[f64],
    cfg: &SelectionConfig,
) -> Result<SelectionExperiment> {
    if deltas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("delta schedule must be increasing".into()));
    }
    let bounded = dist.upper().is_finite();
    let cs: Vec<f64> = if candidates.is_empty() && bounded { vec![0.0] } else { candidates.to_vec() };
    let pairs: Vec<(f64, f64)> = deltas.iter().flat_map(|&d| cs.iter().map(move |&c| (d, c))).collect();
    let cells = pairs
        .par_iter()
        .map(|&(delta, c)| {
            let cell = if bounded {
                bounded_cell(dist, delta, c, cfg)
            } else {
                unbounded_cell(dist, delta, c, cfg)
            };
            cell.unwrap_or_else(|e| SelectionCell::failed(delta, c, e))
        })
        .collect();
    Ok(SelectionExperiment {
        dist: dist.spec(),
        bounded,
        deltas: deltas.to_vec(),
        candidates: cs,
        cells,
    })
}

/// Player 2's assigned point for the types the profile leaves unmatched.
pub fn unmatched_schedule(a_bar_1: f64, m_delta: f64, theta: f64) -> StoppingTime {
    if theta < m_delta {
        return StoppingTime::Forever;
    }
    StoppingTime::At(a_bar_1 * theta / m_delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn al_and_bt_share_the_family() {
        let u = TypeDistribution::uniform01();
        let a = perturbed_family(u.clone(), PerturbationConfig::Al { delta: 0.7 }, Anchor::C(0.2)).unwrap();
        let b = perturbed_family(u, PerturbationConfig::Bt { epsilon: 0.3 }, Anchor::C(0.2)).unwrap();
        for &t in &[0.1, 0.4, 0.8] {
            let (ka, kb) = (a.k(t).unwrap(), b.k(t).unwrap());
            assert!((ka - kb).abs() < 1e-12, "{t}: {ka} vs {kb}");
        }
    }

    #[test]
    fn zero_discount_still_builds() {
        let f = perturbed_family(
            TypeDistribution::exponential(1.0).unwrap(),
            PerturbationConfig::Bt { epsilon: 1.0 },
            Anchor::C(0.2),
        )
        .unwrap();
        assert!(f.k(1.0).unwrap() < 1.0);
    }

    #[test]
    fn symmetric_perturbed_map_is_identity() {
        let f = perturbed_family(
            TypeDistribution::exponential(1.0).unwrap(),
            PerturbationConfig::Al { delta: 0.9 },
            Anchor::C(0.0),
        )
        .unwrap();
        for &t in &[0.01, 1.0, 7.0] {
            assert_eq!(f.k(t).unwrap(), t);
        }
    }

    #[test]
    fn equivalence_examples() {
        let u = TypeDistribution::uniform01();
        let grid = type_grid(&u, 0.0, 128, 1e-6).unwrap();
        assert!(equivalence_check(&u, 0.5, 0.1, &grid).unwrap() < 1e-8);
        assert_eq!(equivalence_check(&u, 0.5, 0.0, &grid).unwrap(), 0.0);
        let p = TypeDistribution::pareto(1.0, 1.0).unwrap();
        let fam = perturbed_family(p.clone(), PerturbationConfig::Al { delta: 0.8 }, Anchor::C(0.3)).unwrap();
        let grid = type_grid(&p, fam.theta1(), 128, 1e-6).unwrap();
        assert!(equivalence_check(&p, 0.8, 0.3, &grid).unwrap() < 1e-8);
    }

    #[test]
    fn bounded_selection_forces_zero() {
        let u = TypeDistribution::uniform01();
        for delta in [0.5, 0.9] {
            let s = bounded_support_selection(&u, delta).unwrap();
            assert_eq!(s.forced_c, 0.0);
            assert!(s.backward_residual < 1e-6, "{}", s.backward_residual);
        }
        let e = TypeDistribution::exponential(1.0).unwrap();
        assert!(matches!(bounded_support_selection(&e, 0.9), Err(Error::Precondition(_))));
    }

    #[test]
    fn triangular_selection() {
        // density 2x on (0, 1)
        let pts: Vec<(f64, f64)> = (0..=40).map(|i| i as f64 / 40.0).map(|x| (x, x * x)).collect();
        let d = TypeDistribution::tabulated(&pts).unwrap();
        let s = bounded_support_selection(&d, 0.9).unwrap();
        assert_eq!(s.forced_c, 0.0);
    }

    #[test]
    fn exponential_cell_respects_bound() {
        let e = TypeDistribution::exponential(1.0).unwrap();
        let ev = unbounded_support_experiment(&e, 0.9, 0.5).unwrap();
        let m = ev.m_delta.unwrap();
        assert!(m.is_finite());
        assert!(ev.a_bar_1 <= m / (1.0 - 0.9));
        assert!(!ev.rows.is_empty());
    }

    #[test]
    fn zero_constant_leaves_nobody_unmatched() {
        let e = TypeDistribution::exponential(1.0).unwrap();
        let ev = unbounded_support_experiment(&e, 0.9, 0.0).unwrap();
        assert!(ev.m_delta.is_none());
        assert_eq!(ev.max_gain, 0.0);
    }

    #[test]
    fn pareto_unmatched_types_gain_near_the_cap() {
        let p = TypeDistribution::pareto(1.0, 1.0).unwrap();
        let ev = unbounded_support_experiment(&p, 0.5, 0.3).unwrap();
        assert!(ev.max_gain > 0.0);
        let best = ev.rows.iter().max_by(|a, b| a.gain.total_cmp(&b.gain)).unwrap();
        assert!((best.best_deviation - ev.a_bar_1).abs() <= 0.05 * ev.a_bar_1);
    }

    #[test]
    fn sweep_keeps_every_cell_in_order() {
        let e = TypeDistribution::exponential(1.0).unwrap();
        let cfg = SelectionConfig { grid: 128, ..Default::default() };
        let x = selection_sweep(&e, &[0.5, 0.9], &[0.1, 0.5, 1.0], &cfg).unwrap();
        assert_eq!(x.cells.len(), 6);
        let order: Vec<(f64, f64)> = x.cells.iter().map(|c| (c.delta, c.c)).collect();
        assert_eq!(order[0], (0.5, 0.1));
        assert_eq!(order[3], (0.9, 0.1));
        let u = selection_sweep(&TypeDistribution::uniform01(), &[0.5, 0.9], &[], &cfg).unwrap();
        assert!(u.unique_zero());
        let v = serde_json::to_value(&u).unwrap();
        assert_eq!(v["cells"][0]["forced_C"], 0.0);
    }
}
