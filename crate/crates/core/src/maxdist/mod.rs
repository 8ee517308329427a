//! Lorentzian distance, distance fields `d_p` and the eikonal residual.

mod constants;
mod distance;
mod fan;
mod field;
mod variational;

use serde::Serialize;
use thiserror::Error;

pub use constants::{
    estimate_constants, estimate_constants_with, local_margin, ConstantsOptions,
    EmpiricalConstants, Witness,
};
pub use distance::{
    chord_lower_bound, lorentz_distance, lorentz_distance_with, reachable, CausalStatus,
    DistanceOptions, DistanceResult,
};
pub use fan::{distance_field, distance_field_with, FieldDiagnostics, FieldMethod, FieldOptions};
pub use field::{
    hessian_probe, raise, verify_eikonal, EikonalReport, FieldKind, Resolution, ScalarField,
    Window,
};
pub use variational::{maximize_broken_path, variational_distance};

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum MaxDistError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no grid node passes the cone margin")]
    EmptyWindow,
    #[error("({x}, {y}) is not surrounded by valid nodes")]
    MaskMargin { x: f64, y: f64 },
    #[error("{0}")]
    Numerical(String),
}
