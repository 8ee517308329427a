use serde::Serialize;

use super::domain::{domain_membership, AngularDomain, Side};
use super::BusemannError;
use crate::causal::{distance_to_ray, estimate_cone, ConeEstimate};
use crate::geodesic::{shoot_with, Geodesic, ShootOptions};
use crate::lines::LineOptions;
use crate::maxdist::chord_lower_bound;
use crate::metric::Metric;
use crate::Vec2;

/// Ray parameters `t_1 < t_2 < …` at which poles are taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// `t_i = spacing · i`.
    Arithmetic { spacing: f64 },
    /// `t_i = first · ratio^(i−1)`.
    Geometric { first: f64, ratio: f64 },
}

impl Schedule {
    pub fn times(&self, n: usize) -> Vec<f64> {
        (1..=n)
            .map(|i| match *self {
                Schedule::Arithmetic { spacing } => spacing * i as f64,
                Schedule::Geometric { first, ratio } => first * ratio.powi(i as i32 - 1),
            })
            .collect()
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Geometric {
            first: 5.0,
            ratio: 2.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[derive(Default)]
pub struct PoleOptions {
    pub schedule: Schedule,
    pub cone: Option<ConeEstimate>,
    pub line: LineOptions,
}


#[derive(Clone, Debug, Serialize)]
pub struct PoleSequence {
    pub pole: Vec2,
    pub poles: Vec<Vec2>,
    pub deck_shifts: Vec<[i64; 2]>,
    pub direction: Vec2,
    pub times: Vec<f64>,
    /// Largest distance of a chord `p_i − p_j` (`i < j`) from the ray `ᾱ`.
    pub q: f64,
    /// Largest `|γ(t_i) − γ(0) + k_i|`.
    pub rounding_radius: f64,
    /// Certified lower bounds for `d(p_{i+1}, p_i)`.
    pub separations: Vec<f64>,
    pub boundary_decks: ([i64; 2], [i64; 2]),
}

pub fn build_pole_sequence<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    alpha: Vec2,
    n: usize,
    ray: &Geodesic,
) -> Result<PoleSequence, BusemannError> {
    build_pole_sequence_with(metric, p, alpha, n, ray, &PoleOptions::default())
}

pub fn build_pole_sequence_with<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    alpha: Vec2,
    n: usize,
    ray: &Geodesic,
    opts: &PoleOptions,
) -> Result<PoleSequence, BusemannError> {
    if n < 3 {
        return Err(BusemannError::InvalidInput(format!("need at least 3 poles, got {n}")));
    }
    if (ray.start() - p).norm() > 1e-9 {
        return Err(BusemannError::InvalidInput("ray does not start at the pole".into()));
    }
    let times = opts.schedule.times(n);
    if times.windows(2).any(|w| !(w[1] > w[0])) || !(times[0] > 0.0) {
        return Err(BusemannError::InvalidInput("schedule must be positive and increasing".into()));
    }
    let t_max = times[n - 1];
    if t_max > ray.domain.1 + 1e-9 {
        return Err(BusemannError::InvalidInput(format!(
            "ray reaches t = {}, schedule needs {t_max}",
            ray.domain.1
        )));
    }
    let alpha = alpha.normalize();
    let cone = cone_of(metric, opts.cone)?;
    let mut decks = Vec::with_capacity(n);
    let mut rounding: f64 = 0.0;
    for &t in &times {
        let disp = ray.point_at(t) - p;
        let k = [-(disp.x.round() as i64), -(disp.y.round() as i64)];
        rounding = rounding.max((disp + Vec2::new(k[0] as f64, k[1] as f64)).norm());
        decks.push(k);
    }
    let domain = AngularDomain::new(metric, p, &alpha, Side::Past, &cone, &opts.line)?;
    let separations = validate_condition_star(metric, &domain, &decks)?;
    let poles: Vec<Vec2> = decks.iter().map(|k| p + Vec2::new(k[0] as f64, k[1] as f64)).collect();
    let mut q: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            q = q.max(distance_to_ray(&(poles[i] - poles[j]), &alpha));
        }
    }
    Ok(PoleSequence {
        pole: p,
        poles,
        deck_shifts: decks,
        direction: alpha,
        times,
        q,
        rounding_radius: rounding,
        separations,
        boundary_decks: (domain.line_minus.deck, domain.line_plus.deck),
    })
}

fn cone_of<M: Metric + ?Sized>(metric: &M, cone: Option<ConeEstimate>) -> Result<ConeEstimate, BusemannError> {
    match cone {
        Some(c) => Ok(c),
        None => estimate_cone(metric, 100.0).map_err(|e| BusemannError::Cone(e.to_string())),
    }
}

/// Checks `p_{i+1} ∈ D⁻(p_i)` and `d(p_{i+1}, p_i) ≥ 1` for consecutive
/// deck shifts, using `D⁻(p + k) = D⁻(p) + k`. Returns the certified
/// separations.
pub fn validate_condition_star<M: Metric + ?Sized>(
    metric: &M,
    past_domain: &AngularDomain,
    decks: &[[i64; 2]],
) -> Result<Vec<f64>, BusemannError> {
    if past_domain.side != Side::Past {
        return Err(BusemannError::InvalidInput("the pole-sequence condition needs a past domain".into()));
    }
    let p = past_domain.pole;
    let mut seps = Vec::with_capacity(decks.len().saturating_sub(1));
    for (i, w) in decks.windows(2).enumerate() {
        let shift = Vec2::new((w[1][0] - w[0][0]) as f64, (w[1][1] - w[0][1]) as f64);
        let x = p + shift;
        let fail = |reason: String| BusemannError::ConditionStarViolation { i, j: i + 1, reason };
        if !domain_membership(metric, past_domain, &x)? {
            return Err(fail(format!("shift {shift:?} is not in the past angular domain")));
        }
        let d = match chord_lower_bound(metric, x, p, 256) {
            Some(b) if b >= 1.0 => b,
            _ => shoot_with(metric, x, p, &ShootOptions { step: 1e-2, ..ShootOptions::default() })
                .map(|s| s.arrival)
                .unwrap_or(0.0),
        };
        if d < 1.0 {
            return Err(fail(format!("d(p_{}, p_{i}) = {d} < 1", i + 1)));
        }
        seps.push(d);
    }
    Ok(seps)
}
