//! Finite-type, finite-action version of the game, solved by brute force.

use serde::Serialize;

use super::gap::{quantile_types, Profile};
use crate::dist::TypeDistribution;
use crate::equilibrium::{Player, StoppingTime};
use crate::error::{Error, Result};

pub const MAX_TYPES: usize = 64;
pub const MAX_ACTIONS: usize = 1024;

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub n_types: usize,
    pub n_actions: usize,
    pub tail: f64,
    pub delta: f64,
    pub max_iterations: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_types: 32,
            n_actions: 512,
            tail: 1e-6,
            delta: 1.0,
            max_iterations: 500,
        }
    }
}

pub enum OracleMode<'a> {
    /// Snap the profile to the action grid and measure each type's gain.
    Check(&'a Profile),
    /// Alternate best responses starting from the snapped profile.
    Search(&'a Profile),
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscreteRow {
    pub theta: f64,
    pub action1: f64,
    pub action2: f64,
    pub gain1: f64,
    pub gain2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscreteReport {
    pub n_types: usize,
    pub n_actions: usize,
    pub delta_a: f64,
    pub theta_max: f64,
    /// `2 Δa θ_max`
    pub bound: f64,
    pub max_gain: f64,
    pub passed: bool,
    pub iterations: usize,
    pub converged: bool,
    pub rows: Vec<DiscreteRow>,
}

/// Payoff of every action for every type against an opponent whose types
/// (equally likely) play the given action indices.
fn payoff_table(types: &[f64], actions: &[f64], opp: &[usize], delta: f64) -> Vec<Vec<f64>> {
    let w = 1.0 / opp.len() as f64;
    let mut mass = vec![0.0; actions.len()];
    for &j in opp {
        mass[j] += w;
    }
    // mass and first moment strictly below each action
    let mut below = Vec::with_capacity(actions.len());
    let mut moment = Vec::with_capacity(actions.len());
    let (mut acc, mut mom) = (0.0, 0.0);
    for (l, &a) in actions.iter().enumerate() {
        below.push(acc);
        moment.push(mom);
        acc += mass[l];
        mom += mass[l] * a;
    }
    types
        .iter()
        .map(|&theta| {
            actions
                .iter()
                .enumerate()
                .map(|(l, &a)| {
                    let (wl, tie) = (below[l], mass[l]);
                    theta * wl - delta * moment[l] - (1.0 - delta) * a * wl + tie * (theta / 2.0 - a)
                        - a * (1.0 - wl - tie)
                })
                .collect()
        })
        .collect()
}

/// Lowest-index maximiser per type.
fn best_responses(table: &[Vec<f64>]) -> Vec<usize> {
    table
        .iter()
        .map(|row| {
            let mut best = 0;
            for (l, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = l;
                }
            }
            best
        })
        .collect()
}

fn gains(table: &[Vec<f64>], current: &[usize]) -> Vec<f64> {
    table
        .iter()
        .zip(current)
        .map(|(row, &c)| row.iter().copied().fold(f64::NEG_INFINITY, f64::max) - row[c])
        .collect()
}

fn snap(a: StoppingTime, delta_a: f64, n: usize) -> usize {
    match a {
        StoppingTime::At(a) => ((a / delta_a).round() as usize).min(n - 1),
        StoppingTime::Forever => n - 1,
    }
}

/// Discrete analogue of the game with `n_types` equally likely types and
/// `n_actions` stopping points on `[0, 1.5 × largest assigned point]`.
pub fn discrete_oracle(dist: &TypeDistribution, cfg: &OracleConfig, mode: OracleMode<'_>) -> Result<DiscreteReport> {
    if cfg.n_types == 0 || cfg.n_types > MAX_TYPES {
        return Err(Error::InvalidParameter(format!(
            "n_types must lie in 1..={MAX_TYPES}, got {}",
            cfg.n_types
        )));
    }
    if cfg.n_actions < 2 || cfg.n_actions > MAX_ACTIONS {
        return Err(Error::InvalidParameter(format!(
            "n_actions must lie in 2..={MAX_ACTIONS}, got {}",
            cfg.n_actions
        )));
    }
    let profile = match mode {
        OracleMode::Check(p) | OracleMode::Search(p) => p,
    };
    let types = quantile_types(dist, cfg.n_types, cfg.tail)?;
    let mut assigned = [Vec::new(), Vec::new()];
    for (slot, p) in assigned.iter_mut().zip([Player::One, Player::Two]) {
        *slot = types
            .iter()
            .map(|&t| profile.curve(p).eval(t))
            .collect::<Result<Vec<_>>>()?;
    }
    let top = assigned
        .iter()
        .flatten()
        .filter_map(|s| s.finite())
        .fold(0.0f64, f64::max);
    let span = if top > 0.0 { 1.5 * top } else { 1.0 };
    let delta_a = span / (cfg.n_actions - 1) as f64;
    let actions: Vec<f64> = (0..cfg.n_actions).map(|i| i as f64 * delta_a).collect();
    let mut p1: Vec<usize> = assigned[0].iter().map(|&a| snap(a, delta_a, cfg.n_actions)).collect();
    let mut p2: Vec<usize> = assigned[1].iter().map(|&a| snap(a, delta_a, cfg.n_actions)).collect();

    let (mut iterations, mut converged) = (0, true);
    if let OracleMode::Search(_) = mode {
        converged = false;
        while iterations < cfg.max_iterations {
            iterations += 1;
            let n1 = best_responses(&payoff_table(&types, &actions, &p2, cfg.delta));
            let n2 = best_responses(&payoff_table(&types, &actions, &n1, cfg.delta));
            let fixed = n1 == p1 && n2 == p2;
            p1 = n1;
            p2 = n2;
            if fixed {
                converged = true;
                break;
            }
        }
        if !converged {
            log::warn!("best-response search stopped after {iterations} iterations");
        }
    }
    let g1 = gains(&payoff_table(&types, &actions, &p2, cfg.delta), &p1);
    let g2 = gains(&payoff_table(&types, &actions, &p1, cfg.delta), &p2);
    let max_gain = g1.iter().chain(&g2).copied().fold(0.0f64, f64::max);
    let theta_max = types.iter().copied().fold(0.0f64, f64::max);
    let bound = 2.0 * delta_a * theta_max;
    let rows = (0..types.len())
        .map(|i| DiscreteRow {
            theta: types[i],
            action1: actions[p1[i]],
            action2: actions[p2[i]],
            gain1: g1[i],
            gain2: g2[i],
        })
        .collect();
    Ok(DiscreteReport {
        n_types: cfg.n_types,
        n_actions: cfg.n_actions,
        delta_a,
        theta_max,
        bound,
        max_gain,
        passed: max_gain <= bound,
        iterations,
        converged,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::ClosedForm;

    /// Payoff by enumerating the opponent's types one at a time.
    fn brute(theta: f64, a: f64, opp: &[f64], delta: f64) -> f64 {
        opp.iter()
            .map(|&b| {
                if a > b {
                    theta - delta * b - (1.0 - delta) * a
                } else if a == b {
                    theta / 2.0 - a
                } else {
                    -a
                }
            })
            .sum::<f64>()
            / opp.len() as f64
    }

    #[test]
    fn table_matches_enumeration() {
        let actions: Vec<f64> = (0..6).map(|i| 0.25 * i as f64).collect();
        let opp = [0, 2, 2, 5];
        let opp_a: Vec<f64> = opp.iter().map(|&i| actions[i]).collect();
        for delta in [1.0, 0.6] {
            let t = payoff_table(&[0.7, 2.0], &actions, &opp, delta);
            for (row, theta) in t.iter().zip([0.7, 2.0]) {
                for (l, &p) in row.iter().enumerate() {
                    assert!((p - brute(theta, actions[l], &opp_a, delta)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn low_value_concedes_against_positive_stops() {
        let actions: Vec<f64> = (0..10).map(|i| 0.5 * i as f64).collect();
        for j in 1..10 {
            let t = payoff_table(&[0.3], &actions, &[j], 1.0);
            assert_eq!(best_responses(&t), vec![0]);
        }
    }

    #[test]
    fn size_limits() {
        let s = ClosedForm::UniformGamma { gamma: 1.0 }.family().unwrap().solve(64, 1e-6).unwrap();
        let p = Profile::from_solution(&s);
        let d = TypeDistribution::uniform01();
        let big = OracleConfig { n_types: 65, ..Default::default() };
        assert!(discrete_oracle(&d, &big, OracleMode::Check(&p)).is_err());
        let big = OracleConfig { n_actions: 1025, ..Default::default() };
        assert!(discrete_oracle(&d, &big, OracleMode::Check(&p)).is_err());
    }

    #[test]
    fn exponential_profiles_pass_the_discrete_check() {
        let d = TypeDistribution::exponential(1.0).unwrap();
        for gamma in [1.0 / 3.0, 1.0] {
            let s = ClosedForm::ExpGamma { lambda: 1.0, gamma }.family().unwrap().solve(256, 1e-6).unwrap();
            let p = Profile::from_solution(&s);
            let r = discrete_oracle(&d, &OracleConfig::default(), OracleMode::Check(&p)).unwrap();
            assert!(r.passed, "γ = {gamma}: {} > {}", r.max_gain, r.bound);
        }
    }

    #[test]
    fn search_reports_a_residual() {
        let d = TypeDistribution::uniform01();
        let s = ClosedForm::UniformGamma { gamma: 1.0 }.family().unwrap().solve(64, 1e-6).unwrap();
        let p = Profile::from_solution(&s);
        let cfg = OracleConfig { n_types: 8, n_actions: 64, ..Default::default() };
        let r = discrete_oracle(&d, &cfg, OracleMode::Search(&p)).unwrap();
        assert!(r.iterations >= 1 && r.iterations <= 500);
        if r.converged {
            assert_eq!(r.max_gain, 0.0);
        }
        assert!(r.max_gain.is_finite());
    }
}
