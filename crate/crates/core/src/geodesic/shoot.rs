use serde::Serialize;

use super::integrate::{integrate_geodesic, rk4_step, trace, Geodesic, State, DEFAULT_STEP};
use super::GeodesicError;
use crate::metric::{BoostFrame, Metric};
use crate::roots::{brent, brent_with, expand_bracket};
use crate::{cross, Vec2};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShootOptions {
    /// Euclidean length of one integration step.
    pub step: f64,
    /// Accepted Euclidean miss at closest approach.
    pub tol: f64,
    /// Largest rapidity searched.
    pub theta_max: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            step: DEFAULT_STEP,
            tol: 1e-9,
            theta_max: 8.0,
        }
    }
}

/// Closest Euclidean approach of a geodesic to a target point.
#[derive(Clone, Copy, Debug)]
pub struct Approach {
    /// Affine parameter of closest approach.
    pub t: f64,
    pub state: State,
    /// `v̂ × (target − γ)`: positive when the target lies to the left.
    pub miss: f64,
    pub distance: f64,
    /// False if the parameter limit was hit first.
    pub reached: bool,
}

fn approach_at(t: f64, s: State, target: &Vec2, reached: bool) -> Approach {
    let d = target - s.p;
    Approach {
        t,
        state: s,
        miss: cross(&s.v.normalize(), &d),
        distance: d.norm(),
        reached,
    }
}

/// First local minimum of `|γ(t) − target|` for `t ∈ [0, max_t]`, with
/// fixed affine step `h`.
pub fn closest_approach<M: Metric + ?Sized>(
    metric: &M,
    start: State,
    target: &Vec2,
    h: f64,
    max_t: f64,
) -> Approach {
    let phi = |s: &State| (s.p - target).dot(&s.v);
    if phi(&start) >= 0.0 {
        return approach_at(0.0, start, target, true);
    }
    let n = (max_t / h).ceil().max(1.0) as usize;
    let h = max_t / n as f64;
    let mut hit: Option<(usize, State)> = None;
    let (last, _) = trace(metric, start, h, n, |k, prev, next| {
        if phi(next) >= 0.0 {
            hit = Some((k - 1, *prev));
            return false;
        }
        true
    });
    match hit {
        None => approach_at(max_t, last, target, false),
        Some((k, base)) => {
            let s = brent(|s| phi(&rk4_step(metric, &base, s)), 0.0, h, 1e-15, 200)
                .unwrap_or(h);
            let st = rk4_step(metric, &base, s);
            approach_at(k as f64 * h + s, st, target, true)
        }
    }
}

/// A shot from `x` toward a target.
#[derive(Clone, Debug, Serialize)]
pub struct Shot {
    pub theta: f64,
    pub velocity: [f64; 2],
    /// Affine parameter (proper time) at arrival.
    pub arrival: f64,
    pub miss: f64,
    pub geodesic: Geodesic,
}

/// Affine step and parameter limit for a unit velocity `v` aimed at a
/// target at Euclidean distance `reach`.
pub(crate) fn ray_budget<M: Metric + ?Sized>(
    metric: &M,
    v: &Vec2,
    reach: f64,
    step: f64,
) -> (f64, f64) {
    let speed = v.norm();
    let max_t = (2.0 * reach + 1.0) / speed;
    if metric.is_constant() {
        (max_t, max_t)
    } else {
        (step / speed, max_t)
    }
}

pub(crate) fn miss_for<M: Metric + ?Sized>(
    metric: &M,
    frame: &BoostFrame,
    x: &Vec2,
    y: &Vec2,
    theta: f64,
    step: f64,
) -> Approach {
    let v = frame.velocity(theta);
    let (h, max_t) = ray_budget(metric, &v, (y - x).norm(), step);
    closest_approach(metric, State { p: *x, v }, y, h, max_t)
}

pub fn shoot_to_target<M: Metric + ?Sized>(
    metric: &M,
    x: Vec2,
    y: Vec2,
    tol: f64,
) -> Result<Shot, GeodesicError> {
    shoot_with(
        metric,
        x,
        y,
        &ShootOptions {
            tol,
            ..ShootOptions::default()
        },
    )
}

/// Brackets the rapidity around the chord's own rapidity and refines the
/// signed miss with Brent's method.
pub fn shoot_with<M: Metric + ?Sized>(
    metric: &M,
    x: Vec2,
    y: Vec2,
    opts: &ShootOptions,
) -> Result<Shot, GeodesicError> {
    if (y - x).norm() == 0.0 {
        return Err(GeodesicError::InvalidInput("target equals start".into()));
    }
    let g = metric.matrix(&x);
    let frame = BoostFrame::from_matrix(&g);
    let th = opts.theta_max;
    let guess = frame
        .rapidity(&g, &(y - x))
        .unwrap_or(0.0)
        .clamp(-th, th);
    let miss = |theta: f64| {
        let a = miss_for(metric, &frame, &x, &y, theta, opts.step);
        if a.reached {
            a.miss
        } else {
            f64::NAN
        }
    };
    let (a, fa, b, fb) =
        expand_bracket(miss, guess - 0.05, guess + 0.05, -th, th, 60).ok_or(GeodesicError::NoBracket)?;
    let theta = brent_with(miss, a, fa, b, fb, 1e-15, 200).ok_or(GeodesicError::Divergence {
        miss: fa.abs().min(fb.abs()),
    })?;
    finish(metric, &frame, x, y, theta, opts)
}

pub(crate) fn finish<M: Metric + ?Sized>(
    metric: &M,
    frame: &BoostFrame,
    x: Vec2,
    y: Vec2,
    theta: f64,
    opts: &ShootOptions,
) -> Result<Shot, GeodesicError> {
    let app = miss_for(metric, frame, &x, &y, theta, opts.step);
    if !app.reached || app.distance > opts.tol {
        return Err(GeodesicError::Divergence { miss: app.distance });
    }
    let v = frame.velocity(theta);
    let affine_step = if metric.is_constant() {
        app.t.max(f64::MIN_POSITIVE)
    } else {
        opts.step / v.norm()
    };
    let geodesic = integrate_geodesic(metric, x, v, app.t, affine_step)?;
    Ok(Shot {
        theta,
        velocity: [v.x, v.y],
        arrival: app.t,
        miss: app.miss,
        geodesic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpec;

    #[test]
    fn flat_shot_matches_closed_form() {
        let s = shoot_to_target(&MetricSpec::flat(), Vec2::zeros(), Vec2::new(1.0, 2.0), 1e-9)
            .unwrap();
        let s3 = 3f64.sqrt();
        assert!((s.arrival - s3).abs() < 1e-12);
        assert!((Vec2::new(s.velocity[0], s.velocity[1]) - Vec2::new(1.0, 2.0) / s3).norm() < 1e-12);
        assert!((s.geodesic.g_length - s3).abs() < 1e-12);
    }

    #[test]
    fn spacelike_target_has_no_bracket() {
        let e = shoot_to_target(&MetricSpec::flat(), Vec2::zeros(), Vec2::new(2.0, 1.0), 1e-9)
            .unwrap_err();
        assert_eq!(e, GeodesicError::NoBracket);
    }

    #[test]
    fn sheared_round_trip() {
        let m = MetricSpec::sheared(0.2);
        let y = Vec2::new(0.3, 2.0);
        let s = shoot_to_target(&m, Vec2::zeros(), y, 1e-9).unwrap();
        assert!(s.miss.abs() < 1e-8);
        let v = Vec2::new(s.velocity[0], s.velocity[1]);
        let again = integrate_geodesic(&m, Vec2::zeros(), v, s.arrival, 1e-4).unwrap();
        assert!((again.end() - y).norm() < 1e-8, "{}", (again.end() - y).norm());
    }

    #[test]
    fn closest_approach_of_receding_ray_is_the_start() {
        let a = closest_approach(
            &MetricSpec::flat(),
            State { p: Vec2::zeros(), v: Vec2::new(0.0, 1.0) },
            &Vec2::new(0.0, -1.0),
            0.1,
            5.0,
        );
        assert_eq!(a.t, 0.0);
        assert!((a.distance - 1.0).abs() < 1e-15);
    }
}
