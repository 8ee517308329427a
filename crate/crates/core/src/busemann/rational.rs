use serde::Serialize;

use super::field::BusemannField;
use super::toward::{busemann_toward, ConstructionOptions, Target};
use super::BusemannError;
use crate::maxdist::{Resolution, ScalarField, Window};
use crate::metric::Metric;
use crate::Vec2;

#[derive(Clone, Debug, Serialize)]
pub struct RationalOptions {
    /// Angular offsets of the generic directions of the limit route.
    pub offsets: [f64; 3],
    pub construction: ConstructionOptions,
}

impl Default for RationalOptions {
    fn default() -> Self {
        RationalOptions {
            offsets: [0.12, 0.06, 0.03],
            construction: ConstructionOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RationalField {
    pub deck: [i64; 2],
    /// Route (a): along the periodic line.
    pub direct: BusemannField,
    /// Route (b): fields for the generic directions, anchored at `anchor`.
    pub nearby: Vec<BusemannField>,
    pub directions: Vec<Vec2>,
    /// Quadratic extrapolation of the nearby fields to zero offset.
    pub limit: ScalarField,
    /// Sup gaps between successive nearby fields.
    pub successive_gaps: Vec<f64>,
    /// Sup gap between the routes on the common mask.
    pub route_gap: f64,
    pub anchor: Vec2,
}

fn anchored(f: &ScalarField, at: &Vec2) -> Result<ScalarField, BusemannError> {
    let c = f
        .node_value(at)
        .or_else(|| f.value_at(at))
        .ok_or(BusemannError::InvalidInput(format!("anchor {at:?} is not valid")))?;
    let mut out = f.clone();
    for (v, ok) in out.values.iter_mut().zip(&f.valid) {
        if *ok {
            *v -= c;
        }
    }
    Ok(out)
}

fn rotate(v: &Vec2, a: f64) -> Vec2 {
    let (s, c) = a.sin_cos();
    Vec2::new(c * v.x + s * v.y, -s * v.x + c * v.y)
}

pub fn rational_direction_field<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    k: [i64; 2],
    window: Window,
    resolution: Resolution,
    tol: f64,
) -> Result<RationalField, BusemannError> {
    rational_direction_field_with(metric, p, k, window, resolution, tol, &RationalOptions::default())
}

pub fn rational_direction_field_with<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    k: [i64; 2],
    window: Window,
    resolution: Resolution,
    tol: f64,
    opts: &RationalOptions,
) -> Result<RationalField, BusemannError> {
    let c = &opts.construction;
    let c = c.with_cone(c.resolve_cone(metric)?);
    let alpha = Target::Deck(k).alpha();
    let direct = busemann_toward(metric, p, Target::Deck(k), window, resolution, tol, &c)?;

    let anchor = window.center();
    let mut nearby = Vec::new();
    let mut directions = Vec::new();
    for &off in &opts.offsets {
        let a = rotate(&alpha, off);
        let mut f = busemann_toward(metric, p, Target::Direction(a), window, resolution, tol, &c)?;
        f.field = anchored(&f.field, &anchor)?;
        nearby.push(f);
        directions.push(a);
    }
    let successive_gaps = nearby.windows(2).map(|w| w[1].field.sup_gap(&w[0].field).0).collect();

    let o = opts.offsets;
    let weights: Vec<f64> = (0..3)
        .map(|i| {
            let mut w = 1.0;
            for j in 0..3 {
                if i != j {
                    w *= (0.0 - o[j]) / (o[i] - o[j]);
                }
            }
            w
        })
        .collect();
    let mut limit = nearby[0].field.clone();
    for idx in 0..limit.values.len() {
        let ok = nearby.iter().all(|f| f.field.valid[idx]);
        limit.valid[idx] = ok;
        if !ok {
            continue;
        }
        limit.values[idx] = (0..3).map(|i| weights[i] * nearby[i].field.values[idx]).sum();
        limit.differential[idx] = (0..3).map(|i| nearby[i].field.differential[idx] * weights[i]).sum();
        limit.gradient[idx] = (0..3).map(|i| nearby[i].field.gradient[idx] * weights[i]).sum();
        limit.one_sided[idx] = nearby.iter().any(|f| f.field.one_sided[idx]);
    }
    let direct_anchored = anchored(&direct.field, &anchor)?;
    let route_gap = limit.sup_gap(&direct_anchored).0;
    Ok(RationalField {
        deck: k,
        direct,
        nearby,
        directions,
        limit,
        successive_gaps,
        route_gap,
        anchor,
    })
}
