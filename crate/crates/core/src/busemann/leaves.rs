use rayon::prelude::*;
use serde::Serialize;

use super::field::BusemannField;
use super::BusemannError;
use crate::causal::{asymptotic_direction, estimate_cone, ConeEstimate, DirectionEstimate};
use crate::geodesic::integrate_geodesic;
use crate::maxdist::ScalarField;
use crate::metric::{inner_with, Metric};
use crate::Vec2;

#[derive(Clone, Debug, Serialize)]
pub struct LeafOptions {
    /// Parameter step of the gradient flow.
    pub step: f64,
    /// Length of the geodesic continuation used for the direction estimate.
    pub direction_horizon: f64,
    pub cone: Option<ConeEstimate>,
}

impl Default for LeafOptions {
    fn default() -> Self {
        LeafOptions {
            step: 1e-3,
            direction_horizon: 200.0,
            cone: None,
        }
    }
}

/// One integral curve of the gradient, inside the window.
#[derive(Clone, Debug, Serialize)]
pub struct Leaf {
    pub seed: Vec2,
    pub times: Vec<f64>,
    pub points: Vec<Vec2>,
    /// The leaf reached the edge of the valid region before the horizon.
    pub left_window: bool,
    /// Largest Euclidean distance to the geodesic with the same initial data.
    pub geodesic_deviation: f64,
    /// Of the geodesic continuation from the seed.
    pub direction: DirectionEstimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct FoliationChart {
    pub leaves: Vec<Leaf>,
    pub seeds: Vec<Vec2>,
    pub window: crate::maxdist::Window,
    /// Smallest distance between two leaves at equal parameter.
    pub min_separation: f64,
    pub max_geodesic_deviation: f64,
    /// Largest `|α_leaf − α|`.
    pub max_direction_error: f64,
}

pub fn integral_curves<M: Metric + ?Sized>(
    metric: &M,
    field: &BusemannField,
    seeds: &[Vec2],
    horizon: f64,
) -> Result<FoliationChart, BusemannError> {
    integral_curves_with(metric, field, seeds, horizon, &LeafOptions::default())
}

fn flow(field: &ScalarField, seed: Vec2, horizon: f64, h: f64) -> (Vec<f64>, Vec<Vec2>, bool) {
    let mut ts = vec![0.0];
    let mut ps = vec![seed];
    let n = (horizon / h).ceil() as usize;
    let mut x = seed;
    for k in 0..n {
        let step = || -> Option<Vec2> {
            let k1 = field.gradient_at(&x)?;
            let k2 = field.gradient_at(&(x + k1 * (h / 2.0)))?;
            let k3 = field.gradient_at(&(x + k2 * (h / 2.0)))?;
            let k4 = field.gradient_at(&(x + k3 * h))?;
            Some(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
        };
        match step() {
            Some(next) => {
                x = next;
                ts.push((k + 1) as f64 * h);
                ps.push(x);
            }
            None => return (ts, ps, true),
        }
    }
    (ts, ps, false)
}

pub fn integral_curves_with<M: Metric + ?Sized>(
    metric: &M,
    field: &BusemannField,
    seeds: &[Vec2],
    horizon: f64,
    opts: &LeafOptions,
) -> Result<FoliationChart, BusemannError> {
    integral_curves_of(metric, &field.field, field.direction, seeds, horizon, opts)
}

/// As [`integral_curves_with`] for a bare potential whose asymptotic
/// direction is `alpha`.
pub fn integral_curves_of<M: Metric + ?Sized>(
    metric: &M,
    f: &ScalarField,
    alpha: Vec2,
    seeds: &[Vec2],
    horizon: f64,
    opts: &LeafOptions,
) -> Result<FoliationChart, BusemannError> {
    if !(horizon > 0.0) || !(opts.step > 0.0) {
        return Err(BusemannError::InvalidInput("horizon and step must be positive".into()));
    }
    let cone = match opts.cone {
        Some(c) => c,
        None => estimate_cone(metric, 100.0).map_err(|e| BusemannError::Cone(e.to_string()))?,
    };
    for s in seeds {
        if f.gradient_at(s).is_none() {
            return Err(BusemannError::InvalidInput(format!("seed {s:?} is outside the valid mask")));
        }
    }
    let leaves: Result<Vec<Leaf>, BusemannError> = seeds
        .par_iter()
        .map(|&seed| {
            let (times, points, left) = flow(f, seed, horizon, opts.step);
            let v = f.gradient_at(&seed).unwrap_or_default();
            let span = times[times.len() - 1];
            let dev = if span > 0.0 {
                let geo = integrate_geodesic(metric, seed, v, span, opts.step)?;
                times
                    .iter()
                    .zip(&points)
                    .map(|(t, p)| (geo.point_at(*t) - p).norm())
                    .fold(0.0, f64::max)
            } else {
                0.0
            };
            let cont_step = if metric.is_constant() {
                opts.direction_horizon
            } else {
                1e-2 / v.norm()
            };
            let cont = integrate_geodesic(metric, seed, v, opts.direction_horizon, cont_step)?;
            Ok(Leaf {
                seed,
                times,
                points,
                left_window: left,
                geodesic_deviation: dev,
                direction: asymptotic_direction(&cont.points(), &cone),
            })
        })
        .collect();
    let leaves = leaves?;
    let mut min_sep = f64::INFINITY;
    for a in 0..leaves.len() {
        for b in a + 1..leaves.len() {
            let (la, lb) = (&leaves[a], &leaves[b]);
            for (p, q) in la.points.iter().zip(&lb.points) {
                min_sep = min_sep.min((p - q).norm());
            }
        }
    }
    let alpha = alpha.normalize();
    Ok(FoliationChart {
        max_geodesic_deviation: leaves.iter().map(|l| l.geodesic_deviation).fold(0.0, f64::max),
        max_direction_error: leaves
            .iter()
            .map(|l| (l.direction.alpha - alpha).norm())
            .fold(0.0, f64::max),
        min_separation: min_sep,
        seeds: seeds.to_vec(),
        window: f.window,
        leaves,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CalibrationReport {
    /// `u(start) − u(end)`.
    pub drop: f64,
    /// g-length of the curve.
    pub length: f64,
    /// `drop − length`; nonnegative for a calibration.
    pub slack: f64,
    /// `|slack|`, the identity residual along integral curves.
    pub residual: f64,
}

/// Compares the drop of `u` along a future timelike polyline with its
/// g-length (midpoint rule per segment).
pub fn calibration_check<M: Metric + ?Sized>(
    metric: &M,
    field: &ScalarField,
    curve: &[Vec2],
) -> Result<CalibrationReport, BusemannError> {
    if curve.len() < 2 {
        return Err(BusemannError::InvalidInput("curve needs two points".into()));
    }
    let value = |p: &Vec2| {
        field
            .node_value(p)
            .or_else(|| field.value_at(p))
            .ok_or(BusemannError::InvalidInput(format!("curve point {p:?} is outside the valid mask")))
    };
    let mut length = 0.0;
    for w in curve.windows(2) {
        let d = w[1] - w[0];
        let g = metric.matrix(&((w[0] + w[1]) * 0.5));
        let q = inner_with(&g, &d, &d);
        if q > 0.0 || inner_with(&g, &d, &Vec2::new(0.0, 1.0)) > 0.0 {
            return Err(BusemannError::InvalidInput("curve is not future causal".into()));
        }
        length += (-q).sqrt();
    }
    let drop = value(&curve[0])? - value(&curve[curve.len() - 1])?;
    let slack = drop - length;
    Ok(CalibrationReport {
        drop,
        length,
        slack,
        residual: slack.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxdist::{FieldKind, Resolution, Window};
    use crate::metric::MetricSpec;

    fn linear() -> ScalarField {
        let w = Window::unit();
        let r = Resolution::square(17);
        let values = (0..r.len()).map(|k| -((k / 17) as f64 / 16.0) + 3.0).collect();
        let mut f = ScalarField::from_values(w, r, FieldKind::Potential, values, vec![true; r.len()]);
        f.compute_gradients(&MetricSpec::flat());
        f
    }

    #[test]
    fn flat_slack_of_a_straight_chord() {
        let f = linear();
        let c = [Vec2::new(0.0, 0.0), Vec2::new(0.25, 0.5), Vec2::new(0.5, 1.0)];
        let r = calibration_check(&MetricSpec::flat(), &f, &c).unwrap();
        assert!((r.drop - 1.0).abs() < 1e-12);
        assert!((r.length - 0.75f64.sqrt()).abs() < 1e-12);
        assert!((r.slack - 0.1339746).abs() < 1e-6);
    }

    #[test]
    fn spacelike_curve_is_rejected() {
        let f = linear();
        let c = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.2)];
        assert!(calibration_check(&MetricSpec::flat(), &f, &c).is_err());
    }
}
