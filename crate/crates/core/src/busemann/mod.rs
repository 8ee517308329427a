//! Busemann-type limits `u = lim t_i − d(p_i, ·)` along receding poles,
//! their gradient foliations, and the checks that go with them.

mod domain;
mod field;
mod leaves;
mod poles;
mod rational;
mod toward;

use serde::Serialize;
use thiserror::Error;

pub use domain::{boundary_decks, domain_membership, AngularDomain, Side};
pub use field::{
    busemann_field, busemann_field_with, check_periodicity, BusemannField, BusemannOptions,
    GapRecord, PeriodicityReport,
};
pub use leaves::{
    calibration_check, integral_curves, integral_curves_of, integral_curves_with, CalibrationReport, FoliationChart,
    Leaf, LeafOptions,
};
pub use poles::{
    build_pole_sequence, build_pole_sequence_with, validate_condition_star, PoleOptions,
    PoleSequence, Schedule,
};
pub use rational::{rational_direction_field, rational_direction_field_with, RationalField, RationalOptions};
pub use toward::{busemann_toward, poles_toward, ConstructionOptions, Target};

use crate::geodesic::GeodesicError;
use crate::lines::LinesError;
use crate::maxdist::MaxDistError;

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum BusemannError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("pole-sequence condition fails between poles {i} and {j}: {reason}")]
    ConditionStarViolation { i: usize, j: usize, reason: String },
    #[error("no convergence to {tol:e}; last gaps {last_gaps:?}")]
    NoConvergence { tol: f64, last_gaps: (f64, f64) },
    #[error("window has no lattice-shifted node pairs")]
    WindowTooSmall,
    #[error("({x}, {y}) is outside the chart of the boundary lines")]
    OutOfChart { x: f64, y: f64 },
    #[error("{0}")]
    Cone(String),
    #[error(transparent)]
    MaxDist(#[from] MaxDistError),
    #[error(transparent)]
    Lines(#[from] LinesError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
}
