use std::fmt;

use thiserror::Error;

/// Which end of an interval a value fell off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Lower,
    Upper,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Lower => "lower",
            Boundary::Upper => "upper",
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("{x} lies outside the support ({lower}, {upper})")]
    Domain { x: f64, lower: f64, upper: f64 },

    #[error("cdf({x}) is within rounding of 1; hazard is not representable")]
    NearBoundary { x: f64 },

    #[error("value {value} is beyond the {boundary} limit {limit} of the hazard potential")]
    Range {
        value: f64,
        boundary: Boundary,
        limit: f64,
    },

    #[error("partner type for theta = {theta} falls outside the support at the {boundary} end")]
    PartnerOutOfSupport { theta: f64, boundary: Boundary },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by parameters lying outside an admissible range.
    pub fn is_range(&self) -> bool {
        matches!(
            self,
            Error::Range { .. } | Error::PartnerOutOfSupport { .. } | Error::Domain { .. }
        )
    }
}
