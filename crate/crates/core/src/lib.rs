//! Equilibria of the two-player war of attrition with independent private
//! prize values.
//!
//! The central object is the hazard potential `Λ` of the type distribution.
//! Equilibria are indexed by an integration constant `C` (or by the highest
//! type conceding at zero) and are built from the type-to-type map
//! `k(θ) = Λ⁻¹(Λ(θ) − C)`.

pub mod dist;
pub mod error;
pub mod numeric;
pub mod equilibrium;
pub mod potential;
pub mod refine;
pub mod verify;

pub use dist::{DistSpec, Support, TypeDistribution, Upper};
pub use error::{Boundary, Error, Result};
pub use potential::{BoundaryLimits, Case, HazardPotential, LimitProbe};
pub use equilibrium::{
    check_admissible, type_grid, AdmissibilityReport, Anchor, ClosedForm, EquilibriumFamily,
    Player, Solution, StoppingTime, StrategyCurve, TypeToTypeMap,
};
