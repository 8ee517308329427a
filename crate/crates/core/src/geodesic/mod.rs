//! Geodesics, Jacobi fields and two-point shooting.

pub(crate) mod integrate;
mod jacobi;
pub(crate) mod shoot;

use serde::Serialize;
use thiserror::Error;

pub use integrate::{
    acceleration, integrate_geodesic, rk4_step, trace, Geodesic, Sample, State, DEFAULT_STEP,
};
pub use jacobi::{
    jacobi_conjugate_scan, jacobi_conjugate_scan_with_step, pole_check, pole_check_with_step,
    ConjugateReport, PoleReport, JACOBI_SIGN,
};
pub use shoot::{
    closest_approach, shoot_to_target, shoot_with, Approach, Shot, ShootOptions,
};

use crate::metric::MetricError;

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum GeodesicError {
    #[error("norm drift {drift:.3e} at t = {t} exceeds 1e-6; reduce the step")]
    Integration { t: f64, drift: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no sign change of the miss function over the timelike cone")]
    NoBracket,
    #[error("shooting stalled with miss {miss:.3e}")]
    Divergence { miss: f64 },
    #[error("{0}")]
    Metric(String),
}

impl From<MetricError> for GeodesicError {
    fn from(e: MetricError) -> Self {
        GeodesicError::Metric(e.to_string())
    }
}
