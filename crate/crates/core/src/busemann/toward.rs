use serde::Serialize;

use super::field::{busemann_field_with, BusemannField, BusemannOptions};
use super::poles::{build_pole_sequence_with, PoleOptions, PoleSequence};
use super::BusemannError;
use crate::causal::{estimate_cone, ConeEstimate};
use crate::lines::{find_periodic_line_with, ray_toward_with, LineOptions};
use crate::maxdist::{Resolution, Window};
use crate::metric::Metric;
use crate::Vec2;

/// Asymptotic direction of a construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Any direction in the open cone; rays come from `ray_toward`.
    Direction(Vec2),
    /// A primitive deck vector; rays are periodic lines.
    Deck([i64; 2]),
}

impl Target {
    pub fn alpha(&self) -> Vec2 {
        match *self {
            Target::Direction(a) => a.normalize(),
            Target::Deck(k) => Vec2::new(k[0] as f64, k[1] as f64).normalize(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstructionOptions {
    pub n_poles: usize,
    pub poles: PoleOptions,
    pub busemann: BusemannOptions,
}

impl Default for ConstructionOptions {
    fn default() -> Self {
        ConstructionOptions {
            n_poles: 14,
            poles: PoleOptions::default(),
            busemann: BusemannOptions::default(),
        }
    }
}

impl ConstructionOptions {
    /// Copies with the cone filled in everywhere it is consumed.
    pub fn with_cone(&self, cone: ConeEstimate) -> Self {
        let mut o = self.clone();
        o.poles.cone = Some(cone);
        o.poles.line.cone = Some(cone);
        o.busemann.field.cone = Some(cone);
        o
    }

    pub fn resolve_cone<M: Metric + ?Sized>(&self, metric: &M) -> Result<ConeEstimate, BusemannError> {
        match self.poles.cone.or(self.busemann.field.cone) {
            Some(c) => Ok(c),
            None => estimate_cone(metric, 100.0).map_err(|e| BusemannError::Cone(e.to_string())),
        }
    }

    fn line(&self) -> &LineOptions {
        &self.poles.line
    }
}

/// Pole sequence along a ray from `p` toward `target`.
pub fn poles_toward<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    target: Target,
    opts: &ConstructionOptions,
) -> Result<PoleSequence, BusemannError> {
    let opts = opts.with_cone(opts.resolve_cone(metric)?);
    if opts.n_poles < 3 {
        return Err(BusemannError::InvalidInput(format!("need at least 3 poles, got {}", opts.n_poles)));
    }
    let horizon = opts.poles.schedule.times(opts.n_poles)[opts.n_poles - 1];
    let ray = match target {
        Target::Deck(k) => find_periodic_line_with(metric, p, k, opts.line())?.extend(horizon),
        Target::Direction(a) => ray_toward_with(metric, p, a, horizon, opts.line())?.geodesic,
    };
    build_pole_sequence_with(metric, p, target.alpha(), opts.n_poles, &ray, &opts.poles)
}

/// Builds the ray, the poles and the limit field in one go.
pub fn busemann_toward<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    target: Target,
    window: Window,
    resolution: Resolution,
    tol: f64,
    opts: &ConstructionOptions,
) -> Result<BusemannField, BusemannError> {
    let opts = opts.with_cone(opts.resolve_cone(metric)?);
    let seq = poles_toward(metric, p, target, &opts)?;
    busemann_field_with(metric, &seq, window, resolution, tol, &opts.busemann)
}
