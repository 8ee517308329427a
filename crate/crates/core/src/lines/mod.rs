//! Periodic timelike lines through poles, and rays of a prescribed
//! asymptotic direction.

use serde::Serialize;
use thiserror::Error;

use crate::causal::{asymptotic_direction, estimate_cone, CausalError, ConeEstimate, DirectionEstimate};
use crate::geodesic::{integrate_geodesic, shoot_with, Geodesic, GeodesicError, Sample, ShootOptions};
use crate::metric::{inner_with, Metric};
use crate::roots::brent;
use crate::{cross, Vec2};

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum LinesError {
    #[error("direction ({0}, {1}) is not strictly inside the stable time cone")]
    OutsideCone(f64, f64),
    #[error("closure defect does not decrease with the number of periods: {defects:?}")]
    NotClosing { defects: Vec<(usize, f64)> },
    #[error("measured direction {measured:?} is {deviation:.3e} from the target, above {threshold:.3e}")]
    DirectionDrift {
        measured: [f64; 2],
        deviation: f64,
        threshold: f64,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error("{0}")]
    Causal(String),
}

impl From<CausalError> for LinesError {
    fn from(e: CausalError) -> Self {
        LinesError::Causal(e.to_string())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LineOptions {
    /// Accepted closure defect (radians).
    pub tol: f64,
    pub shoot: ShootOptions,
    /// Period counts are doubled up to this while the defect keeps falling.
    pub max_periods: usize,
    /// Stable cone for the direction check; estimated at length 100 if absent.
    pub cone: Option<ConeEstimate>,
    /// Largest convergent used for generic directions.
    pub max_convergent: f64,
    /// Euclidean step of extended rays.
    pub ray_step: f64,
}

impl Default for LineOptions {
    fn default() -> Self {
        LineOptions {
            tol: 1e-6,
            shoot: ShootOptions {
                step: 1e-2,
                ..ShootOptions::default()
            },
            max_periods: 64,
            cone: None,
            max_convergent: 200.0,
            ray_step: 1e-2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicLine {
    pub base: Vec2,
    pub deck: [i64; 2],
    /// g-length of one period.
    pub period_length: f64,
    /// Affine parameter of one period.
    pub period: f64,
    /// Maximizer from `base` to `base + N·deck`.
    pub geodesic: Geodesic,
    pub periods: usize,
    /// Angle between departure velocity and arrival velocity.
    pub closure_defect: f64,
    pub defects: Vec<(usize, f64)>,
}

impl PeriodicLine {
    pub fn deck_vector(&self) -> Vec2 {
        Vec2::new(self.deck[0] as f64, self.deck[1] as f64)
    }

    pub fn direction(&self) -> Vec2 {
        self.deck_vector().normalize()
    }

    pub fn velocity(&self) -> Vec2 {
        self.geodesic.samples[0].velocity()
    }

    /// Position at any parameter, by the deck translation.
    pub fn point_at(&self, t: f64) -> Vec2 {
        let m = (t / self.period).floor();
        self.geodesic.point_at(t - m * self.period) + self.deck_vector() * m
    }

    /// `γ` over `[0, horizon]`, sampled at the stored spacing.
    pub fn extend(&self, horizon: f64) -> Geodesic {
        let first: Vec<&Sample> = self.geodesic.samples.iter().filter(|s| s.t < self.period).collect();
        let k = self.deck_vector();
        let mut samples = Vec::new();
        let mut m = 0.0;
        'outer: loop {
            for s in &first {
                let t = s.t + m * self.period;
                if t > horizon {
                    break 'outer;
                }
                samples.push(Sample {
                    t,
                    p: [s.p[0] + m * k.x, s.p[1] + m * k.y],
                    v: s.v,
                });
            }
            m += 1.0;
        }
        let end = self.point_at(horizon);
        let mt = (horizon / self.period).floor();
        let tt = horizon - mt * self.period;
        let i = self.geodesic.samples.partition_point(|s| s.t <= tt).min(self.geodesic.samples.len() - 1);
        if samples.last().is_none_or(|s| s.t < horizon) {
            samples.push(Sample {
                t: horizon,
                p: [end.x, end.y],
                v: self.geodesic.samples[i].v,
            });
        }
        let speed = self.period_length / self.period;
        Geodesic {
            g_length: speed * horizon,
            euclid_length: self.geodesic.euclid_length / self.periods as f64 * horizon / self.period,
            samples,
            domain: (0.0, horizon),
            norm_drift: self.geodesic.norm_drift,
        }
    }

    /// Signed side of `x`: positive to the left of the line oriented by
    /// its deck vector.
    pub fn side(&self, x: &Vec2) -> f64 {
        let k = self.deck_vector();
        let kk = k.norm_squared();
        let m = ((x - self.base).dot(&k) / kk).floor();
        let xr = x - k * m;
        let target = (xr - self.base).dot(&k);
        let f = |s: f64| (self.geodesic.point_at(s) - self.base).dot(&k) - target;
        let s = if f(0.0) >= 0.0 {
            0.0
        } else {
            brent(f, 0.0, self.period, 1e-13, 200).unwrap_or(0.0)
        };
        cross(&k.normalize(), &(xr - self.geodesic.point_at(s)))
    }
}

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn cone_for<M: Metric + ?Sized>(metric: &M, cone: Option<ConeEstimate>) -> Result<ConeEstimate, LinesError> {
    match cone {
        Some(c) => Ok(c),
        None if metric.is_constant() => {
            Ok(estimate_cone(metric, 10.0)?)
        }
        None => Ok(estimate_cone(metric, 100.0)?),
    }
}

pub fn find_periodic_line<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    k: [i64; 2],
    tol: f64,
) -> Result<PeriodicLine, LinesError> {
    find_periodic_line_with(
        metric,
        p,
        k,
        &LineOptions {
            tol,
            ..LineOptions::default()
        },
    )
}

fn angle_between(a: &Vec2, b: &Vec2) -> f64 {
    cross(a, b).atan2(a.dot(b)).abs()
}

pub fn find_periodic_line_with<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    k: [i64; 2],
    opts: &LineOptions,
) -> Result<PeriodicLine, LinesError> {
    if gcd(k[0], k[1]) != 1 {
        return Err(LinesError::InvalidInput(format!("deck vector {k:?} is not primitive")));
    }
    let cone = cone_for(metric, opts.cone)?;
    let kv = Vec2::new(k[0] as f64, k[1] as f64);
    if !cone.contains_direction(&kv.normalize()) {
        let d = kv.normalize();
        return Err(LinesError::OutsideCone(d.x, d.y));
    }
    let mut defects = Vec::new();
    let mut n = 1;
    loop {
        let target = p + kv * n as f64;
        let shot = shoot_with(metric, p, target, &opts.shoot)?;
        let v0 = shot.geodesic.samples[0].velocity();
        let defect = angle_between(&v0, &shot.geodesic.end_velocity());
        defects.push((n, defect));
        let done = n >= 4 && defect < opts.tol;
        let stalled = defects.len() >= 2 && {
            let prev = defects[defects.len() - 2].1;
            defect >= prev && defect >= opts.tol
        };
        if stalled {
            return Err(LinesError::NotClosing { defects });
        }
        if done || n >= opts.max_periods {
            if defect >= opts.tol {
                return Err(LinesError::NotClosing { defects });
            }
            let period = shot.arrival / n as f64;
            return Ok(PeriodicLine {
                base: p,
                deck: k,
                period_length: shot.geodesic.g_length / n as f64,
                period,
                geodesic: shot.geodesic,
                periods: n,
                closure_defect: defect,
                defects,
            });
        }
        n *= 2;
    }
}

/// A ray from `p` with a target asymptotic direction.
#[derive(Clone, Debug, Serialize)]
pub struct Ray {
    pub geodesic: Geodesic,
    pub direction: DirectionEstimate,
    pub target: Vec2,
    /// Deck vectors whose periodic lines fixed the initial velocity.
    pub convergents: Vec<[i64; 2]>,
    /// `|k/|k| − α|` for the last convergent; zero for rational targets.
    pub convergent_gap: f64,
    pub periodic: Option<PeriodicLine>,
}

/// Integer vector with `|k| ≤ bound` parallel to `alpha`, if any.
pub fn rational_direction(alpha: &Vec2, bound: f64) -> Option<[i64; 2]> {
    let a = alpha.normalize();
    let ky_max = bound.floor() as i64;
    for ky in 0..=ky_max {
        let kx = if a.y.abs() < 1e-15 {
            if ky == 0 {
                a.x.signum() as i64
            } else {
                continue;
            }
        } else {
            (a.x / a.y * ky as f64).round() as i64
        };
        if kx == 0 && ky == 0 {
            continue;
        }
        let kv = Vec2::new(kx as f64, ky as f64);
        if kv.norm() <= bound && (kv.normalize() - a).norm() < 1e-12 && gcd(kx, ky) == 1 {
            return Some([kx, ky]);
        }
    }
    None
}

/// Continued-fraction convergents `(h, k)` of `x` with `|(h, k)| ≤ bound`.
pub fn convergents(x: f64, bound: f64) -> Vec<[i64; 2]> {
    let mut out = Vec::new();
    let (mut h0, mut h1) = (1i64, x.floor() as i64);
    let (mut k0, mut k1) = (0i64, 1i64);
    let mut r = x - x.floor();
    if ((h1 * h1 + k1 * k1) as f64).sqrt() <= bound {
        out.push([h1, k1]);
    }
    for _ in 0..60 {
        if r.abs() < 1e-14 {
            break;
        }
        let inv = 1.0 / r;
        let a = inv.floor() as i64;
        r = inv - inv.floor();
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if ((h2 as f64).hypot(k2 as f64)) > bound {
            break;
        }
        out.push([h2, k2]);
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
    }
    out
}

/// Unit future timelike vector with Euclidean direction angle `phi`
/// (measured from the y-axis toward positive x).
fn unit_at_angle<M: Metric + ?Sized>(metric: &M, p: &Vec2, phi: f64) -> Option<Vec2> {
    let u = Vec2::new(phi.sin(), phi.cos());
    let g = metric.matrix(p);
    let q = inner_with(&g, &u, &u);
    (q < 0.0).then(|| u / (-q).sqrt())
}

fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..xs.len() {
        let mut w = ys[i];
        for j in 0..xs.len() {
            if i != j {
                w *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        s += w;
    }
    s
}

pub fn ray_toward<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    alpha: Vec2,
    horizon: f64,
) -> Result<Ray, LinesError> {
    ray_toward_with(metric, p, alpha, horizon, &LineOptions::default())
}

pub fn ray_toward_with<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    alpha: Vec2,
    horizon: f64,
    opts: &LineOptions,
) -> Result<Ray, LinesError> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(LinesError::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    let alpha = alpha.normalize();
    let cone = cone_for(metric, opts.cone)?;
    if !cone.contains_direction(&alpha) {
        return Err(LinesError::OutsideCone(alpha.x, alpha.y));
    }
    let opts = LineOptions {
        cone: Some(cone),
        ..opts.clone()
    };
    if let Some(k) = rational_direction(&alpha, 20.0) {
        let line = find_periodic_line_with(metric, p, k, &opts)?;
        let geodesic = line.extend(horizon);
        let direction = asymptotic_direction(&geodesic.points(), &cone);
        return Ok(Ray {
            geodesic,
            direction,
            target: alpha,
            convergents: vec![k],
            convergent_gap: 0.0,
            periodic: Some(line),
        });
    }
    let all: Vec<[i64; 2]> = convergents(alpha.x / alpha.y, opts.max_convergent)
        .into_iter()
        .filter(|k| cone.contains_direction(&Vec2::new(k[0] as f64, k[1] as f64).normalize()))
        .collect();
    if all.is_empty() {
        return Err(LinesError::InvalidInput(format!(
            "no convergent of {alpha:?} inside the cone with |k| <= {}",
            opts.max_convergent
        )));
    }
    let used: Vec<[i64; 2]> = all[all.len().saturating_sub(3)..].to_vec();
    let mut psi = Vec::new();
    let mut phi = Vec::new();
    for k in &used {
        let line = find_periodic_line_with(metric, p, *k, &opts)?;
        let v = line.velocity();
        psi.push((k[0] as f64).atan2(k[1] as f64));
        phi.push(v.x.atan2(v.y));
    }
    let target_psi = alpha.x.atan2(alpha.y);
    let phi_alpha = lagrange(&psi, &phi, target_psi);
    let v = unit_at_angle(metric, &p, phi_alpha)
        .ok_or_else(|| LinesError::InvalidInput("extrapolated velocity is not timelike".into()))?;
    let step = if metric.is_constant() {
        horizon
    } else {
        opts.ray_step / v.norm()
    };
    let geodesic = integrate_geodesic(metric, p, v, horizon, step)?;
    let direction = asymptotic_direction(&geodesic.points(), &cone);
    let last = used[used.len() - 1];
    let gap = (Vec2::new(last[0] as f64, last[1] as f64).normalize() - alpha).norm();
    let threshold = 10.0 * gap + 2.0 * cone.deviation_bound_d / horizon;
    let deviation = (direction.alpha - alpha).norm();
    if deviation > threshold {
        return Err(LinesError::DirectionDrift {
            measured: [direction.alpha.x, direction.alpha.y],
            deviation,
            threshold,
        });
    }
    Ok(Ray {
        geodesic,
        direction,
        target: alpha,
        convergents: used,
        convergent_gap: gap,
        periodic: None,
    })
}
