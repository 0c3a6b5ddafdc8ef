//! Numerical checks that a profile is an equilibrium: payoffs against the
//! induced stopping-time distribution, best-response gaps, and a brute-force
//! discrete version of the game.

mod discrete;
mod gap;
mod payoff;

pub use discrete::{discrete_oracle, DiscreteReport, DiscreteRow, OracleConfig, OracleMode, MAX_ACTIONS, MAX_TYPES};
pub use gap::{
    best_response_gap, deviation_grid, integral_identity_residual, quantile_types, refine_grid, GapRow,
    Profile, Tolerances, VerificationReport,
};
pub use payoff::{expected_payoff, StoppingTimeDistribution};
