use serde::Serialize;

use super::variational::variational_distance;
use crate::geodesic::{shoot::finish, shoot::miss_for, Geodesic, ShootOptions};
use crate::metric::{inner_with, BoostFrame, CausalCharacter, Metric};
use crate::roots::brent_with;
use crate::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CausalStatus {
    Timelike,
    NullBoundary,
    NotCausallyRelated,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DistanceOptions {
    /// Number of boosts in the sweep.
    pub sweep: usize,
    pub theta_max: f64,
    /// Euclidean step of the sweep rays.
    pub coarse_step: f64,
    /// Euclidean step of the refined rays.
    pub step: f64,
    /// Accepted Euclidean miss of a connecting geodesic.
    pub tol: f64,
    /// Run the broken-path maximization as well.
    pub cross_check: bool,
    pub variational_nodes: usize,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        DistanceOptions {
            sweep: 512,
            theta_max: 6.0,
            coarse_step: 0.05,
            step: 1e-3,
            tol: 1e-9,
            cross_check: false,
            variational_nodes: 64,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceResult {
    pub value: f64,
    pub status: CausalStatus,
    pub maximizer: Option<Geodesic>,
    /// Rapidity of the maximizer's initial velocity in the boost frame at x.
    pub theta: Option<f64>,
    /// Number of distinct connecting geodesics found.
    pub connections: usize,
    /// Two connections with lengths within 1e−9 but distinct directions.
    pub ambiguous_cut: bool,
    pub variational_value: Option<f64>,
    pub method_agreement: Option<f64>,
}

impl DistanceResult {
    fn unrelated(status: CausalStatus) -> Self {
        DistanceResult {
            value: 0.0,
            status,
            maximizer: None,
            theta: None,
            connections: 0,
            ambiguous_cut: false,
            variational_value: None,
            method_agreement: None,
        }
    }
}

/// Lorentzian distance by a shooting sweep over the boost parameter.
pub fn lorentz_distance<M: Metric + ?Sized>(metric: &M, x: Vec2, y: Vec2) -> DistanceResult {
    lorentz_distance_with(metric, x, y, &DistanceOptions::default())
}

pub fn lorentz_distance_with<M: Metric + ?Sized>(
    metric: &M,
    x: Vec2,
    y: Vec2,
    opts: &DistanceOptions,
) -> DistanceResult {
    let chord = y - x;
    if chord.norm() == 0.0 {
        return DistanceResult::unrelated(CausalStatus::NullBoundary);
    }
    let g = metric.matrix(&x);
    let frame = BoostFrame::from_matrix(&g);
    let n = opts.sweep.max(2);
    let thetas: Vec<f64> = (0..n)
        .map(|j| -opts.theta_max + 2.0 * opts.theta_max * j as f64 / (n - 1) as f64)
        .collect();
    let coarse: Vec<f64> = thetas
        .iter()
        .map(|&t| {
            let a = miss_for(metric, &frame, &x, &y, t, opts.coarse_step);
            if a.reached {
                a.miss
            } else {
                f64::NAN
            }
        })
        .collect();
    let fine = |t: f64| {
        let a = miss_for(metric, &frame, &x, &y, t, opts.step);
        if a.reached {
            a.miss
        } else {
            f64::NAN
        }
    };
    let shoot = ShootOptions {
        step: opts.step,
        tol: opts.tol,
        theta_max: opts.theta_max,
    };
    let mut hits: Vec<(f64, crate::geodesic::Shot)> = Vec::new();
    for k in 0..n - 1 {
        let (ca, cb) = (coarse[k], coarse[k + 1]);
        if !(ca * cb <= 0.0) {
            continue;
        }
        // The coarse sign change may sit just outside the fine bracket.
        let lo = k.saturating_sub(1);
        let hi = (k + 2).min(n - 1);
        let mut bracket = None;
        for (a, b) in [(k, k + 1), (lo, k + 1), (k, hi), (lo, hi)] {
            let (fa, fb) = (fine(thetas[a]), fine(thetas[b]));
            if fa * fb <= 0.0 {
                bracket = Some((thetas[a], fa, thetas[b], fb));
                break;
            }
        }
        let Some((a, fa, b, fb)) = bracket else { continue };
        let Some(theta) = brent_with(fine, a, fa, b, fb, 1e-15, 200) else { continue };
        if hits.iter().any(|(t, _)| (t - theta).abs() < 1e-9) {
            continue;
        }
        if let Ok(shot) = finish(metric, &frame, x, y, theta, &shoot) {
            let q = inner_with(&g, &frame.velocity(theta), &frame.velocity(theta));
            if q < 0.0 {
                hits.push((theta, shot));
            }
        }
    }
    if hits.is_empty() {
        let status = match crate::metric::classify_vector(metric, &x, &chord) {
            CausalCharacter::FutureTimelike | CausalCharacter::FutureNull => CausalStatus::NullBoundary,
            _ => CausalStatus::NotCausallyRelated,
        };
        return DistanceResult::unrelated(status);
    }
    hits.sort_by(|a, b| b.1.arrival.total_cmp(&a.1.arrival));
    let ambiguous = hits.len() > 1
        && (hits[0].1.arrival - hits[1].1.arrival).abs() < 1e-9
        && (hits[0].0 - hits[1].0).abs() > 1e-6;
    let connections = hits.len();
    let (theta, best) = hits.swap_remove(0);
    let value = best.arrival;
    let mut result = DistanceResult {
        value,
        status: CausalStatus::Timelike,
        maximizer: Some(best.geodesic),
        theta: Some(theta),
        connections,
        ambiguous_cut: ambiguous,
        variational_value: None,
        method_agreement: None,
    };
    if opts.cross_check {
        if let Some(v) = variational_distance(metric, x, y, opts.variational_nodes) {
            result.variational_value = Some(v);
            result.method_agreement = Some((v - value).abs());
        }
    }
    result
}

/// `y ∈ I⁺(x)`.
pub fn reachable<M: Metric + ?Sized>(metric: &M, x: Vec2, y: Vec2) -> bool {
    if chord_lower_bound(metric, x, y, 64).is_some() {
        return true;
    }
    lorentz_distance(metric, x, y).status == CausalStatus::Timelike
}

/// g-length of the straight chord when it is future timelike at all `n + 1`
/// sample points (a lower bound for `d(x, y)`), by Simpson's rule.
pub fn chord_lower_bound<M: Metric + ?Sized>(metric: &M, x: Vec2, y: Vec2, n: usize) -> Option<f64> {
    let c = y - x;
    let n = n.max(2) & !1;
    let mut speeds = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let p = x + c * (k as f64 / n as f64);
        let g = metric.matrix(&p);
        let q = inner_with(&g, &c, &c);
        let future = inner_with(&g, &c, &Vec2::new(0.0, 1.0)) < 0.0;
        if !(q < 0.0 && future) {
            return None;
        }
        speeds.push((-q).sqrt());
    }
    Some(crate::geodesic::integrate::quadrature(&speeds, 1.0 / n as f64))
}
