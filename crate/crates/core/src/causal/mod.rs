//! Lightlike foliations, the stable time cone and asymptotic directions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geodesic::{integrate_geodesic, GeodesicError};
use crate::metric::{BoostFrame, Metric};
use crate::{cross, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CausalError {
    #[error("null directions are not positively oriented: m- = {m_minus:?}, m+ = {m_plus:?}")]
    Orientation { m_minus: [f64; 2], m_plus: [f64; 2] },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NullFamily {
    /// Leans right: `e0 + e1`, (1,1)/√2 in flat space.
    Minus,
    /// Leans left: `e0 − e1`, (−1,1)/√2 in flat space.
    Plus,
}

/// Unit Euclidean future null direction of `family` at `p`.
pub fn null_direction<M: Metric + ?Sized>(metric: &M, p: &Vec2, family: NullFamily) -> Vec2 {
    let (r, l) = BoostFrame::at(metric, p).null_directions();
    match family {
        NullFamily::Minus => r.normalize(),
        NullFamily::Plus => l.normalize(),
    }
}

/// A lightlike curve parameterized by Euclidean arclength.
#[derive(Clone, Debug, Serialize)]
pub struct NullCurve {
    pub family: NullFamily,
    pub step: f64,
    pub points: Vec<Vec2>,
    pub velocities: Vec<Vec2>,
}

impl NullCurve {
    pub fn length(&self) -> f64 {
        self.step * (self.points.len() - 1) as f64
    }
}

pub const NULL_STEP: f64 = 1e-2;

/// RK4 on the unit null direction field of the chosen family.
pub fn integrate_null_curve<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    family: NullFamily,
    length: f64,
) -> Result<NullCurve, CausalError> {
    integrate_null_curve_with_step(metric, p, family, length, NULL_STEP)
}

pub fn integrate_null_curve_with_step<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    family: NullFamily,
    length: f64,
    step: f64,
) -> Result<NullCurve, CausalError> {
    if !(length > 0.0) || !(step > 0.0) {
        return Err(CausalError::InvalidInput(format!(
            "need length > 0 and step > 0, got {length}, {step}"
        )));
    }
    let n = (length / step).ceil() as usize;
    let h = length / n as f64;
    let field = |x: &Vec2| null_direction(metric, x, family);
    let mut points = Vec::with_capacity(n + 1);
    let mut velocities = Vec::with_capacity(n + 1);
    let mut x = p;
    let mut k1 = field(&x);
    points.push(x);
    velocities.push(k1);
    for _ in 0..n {
        let k2 = field(&(x + k1 * (0.5 * h)));
        let k3 = field(&(x + k2 * (0.5 * h)));
        let k4 = field(&(x + k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !x.iter().all(|c| c.is_finite()) {
            return Err(GeodesicError::Integration {
                t: points.len() as f64 * h,
                drift: f64::NAN,
            }
            .into());
        }
        k1 = field(&x);
        points.push(x);
        velocities.push(k1);
    }
    Ok(NullCurve {
        family,
        step: h,
        points,
        velocities,
    })
}

/// The stable time cone, spanned by `m_minus` (right) and `m_plus` (left).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConeEstimate {
    pub m_minus: Vec2,
    pub m_plus: Vec2,
    pub deviation_bound_d: f64,
    pub integration_length: f64,
}

impl ConeEstimate {
    /// Exact cone of a constant metric, or of the flat one.
    pub fn flat() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ConeEstimate {
            m_minus: Vec2::new(s, s),
            m_plus: Vec2::new(-s, s),
            deviation_bound_d: 0.0,
            integration_length: f64::INFINITY,
        }
    }

    /// Largest ε with `h ∈ 𝔗^ε`, negative outside the cone.
    pub fn margin(&self, h: &Vec2) -> f64 {
        let n = h.norm();
        if n == 0.0 {
            return f64::NEG_INFINITY;
        }
        let a = cross(&self.m_minus, h);
        let b = cross(h, &self.m_plus);
        if a < 0.0 || b < 0.0 {
            return a.min(b) / n;
        }
        let dist = |m: &Vec2, c: f64| if h.dot(m) >= 0.0 { c } else { n };
        dist(&self.m_minus, a).min(dist(&self.m_plus, b)) / n
    }

    /// Whether the direction `alpha` lies strictly inside the open arc.
    pub fn contains_direction(&self, alpha: &Vec2) -> bool {
        cross(&self.m_minus, alpha) > 0.0 && cross(alpha, &self.m_plus) > 0.0
    }
}

/// `h ∈ 𝔗^ε`: inside the closed cone with Euclidean distance at least
/// `ε|h|` to both boundary rays.
pub fn cone_membership(cone: &ConeEstimate, h: &Vec2, epsilon: f64) -> bool {
    let n = h.norm();
    if n == 0.0 {
        return false;
    }
    let a = cross(&cone.m_minus, h);
    let b = cross(h, &cone.m_plus);
    if a < 0.0 || b < 0.0 {
        return false;
    }
    cone.margin(h) >= epsilon
}

pub fn estimate_cone<M: Metric + ?Sized>(metric: &M, length: f64) -> Result<ConeEstimate, CausalError> {
    if !(length >= 10.0) {
        return Err(CausalError::InvalidInput(format!(
            "cone estimation needs length >= 10, got {length}"
        )));
    }
    let (minus, plus) = rayon::join(
        || integrate_null_curve(metric, Vec2::zeros(), NullFamily::Minus, length),
        || integrate_null_curve(metric, Vec2::zeros(), NullFamily::Plus, length),
    );
    let (minus, plus) = (minus?, plus?);
    let chord = |c: &NullCurve| (c.points[c.points.len() - 1] - c.points[0]).normalize();
    let (m_minus, m_plus) = (chord(&minus), chord(&plus));
    let ok = cross(&m_minus, &m_plus) > 1e-9 && m_minus.y >= 0.0 && m_plus.y >= 0.0;
    if !ok {
        return Err(CausalError::Orientation {
            m_minus: [m_minus.x, m_minus.y],
            m_plus: [m_plus.x, m_plus.y],
        });
    }
    let d = chord_deviation(&minus.points, &m_minus).max(chord_deviation(&plus.points, &m_plus));
    Ok(ConeEstimate {
        m_minus,
        m_plus,
        deviation_bound_d: d,
        integration_length: length,
    })
}

/// Euclidean distance from `c` to the closed ray spanned by the unit `alpha`.
pub fn distance_to_ray(c: &Vec2, alpha: &Vec2) -> f64 {
    if c.dot(alpha) >= 0.0 {
        cross(alpha, c).abs()
    } else {
        c.norm()
    }
}

/// Index pairs `(i, i + 2^j)` plus every pair with an endpoint: O(n log n).
pub fn dyadic_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    let steps: Vec<usize> = std::iter::successors(Some(1usize), |s| s.checked_mul(2))
        .take_while(|s| *s < n)
        .collect();
    let inner = (0..n).flat_map(move |i| {
        let steps = steps.clone();
        steps.into_iter().filter(move |s| i + s < n).map(move |s| (i, i + s))
    });
    let ends = (1..n).map(|j| (0, j)).chain((0..n.saturating_sub(1)).map(move |i| (i, n - 1)));
    inner.chain(ends)
}

/// `sup dist(γ(t) − γ(s), ᾱ)` over the dyadic pair schedule.
pub fn chord_deviation(points: &[Vec2], alpha: &Vec2) -> f64 {
    dyadic_pairs(points.len())
        .map(|(i, j)| distance_to_ray(&(points[j] - points[i]), alpha))
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DirectionEstimate {
    pub alpha: Vec2,
    pub d: f64,
    /// Euclidean length of the curve the estimate came from.
    pub confidence_length: f64,
    /// Whether `alpha` lies in the closed arc `[m_minus, m_plus]`.
    pub within_cone: bool,
}

pub fn asymptotic_direction(points: &[Vec2], cone: &ConeEstimate) -> DirectionEstimate {
    let n = points.len();
    let length: f64 = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    if n < 2 {
        return DirectionEstimate {
            alpha: Vec2::zeros(),
            d: 0.0,
            confidence_length: 0.0,
            within_cone: false,
        };
    }
    let alpha = (points[n - 1] - points[0]).normalize();
    DirectionEstimate {
        alpha,
        d: chord_deviation(points, &alpha),
        confidence_length: length,
        within_cone: cone_membership(cone, &alpha, 0.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BEstimate {
    pub b: f64,
    pub n_samples: usize,
    pub witness_start: [f64; 2],
    pub witness_velocity: [f64; 2],
    pub witness_parameter: f64,
}

/// Empirical `sup L_E(γ) / |γ(end) − γ(0)|` over random causal geodesic
/// segments: timelike ones at uniform cone angle, every tenth one null.
pub fn estimate_b<M: Metric + ?Sized>(
    metric: &M,
    n_samples: usize,
    seed: u64,
) -> Result<BEstimate, CausalError> {
    if n_samples < 100 {
        return Err(CausalError::InvalidInput(format!(
            "estimate_b needs at least 100 samples, got {n_samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(Vec2, f64, f64, bool)> = (0..n_samples)
        .map(|i| {
            let p = Vec2::new(rng.gen::<f64>(), rng.gen::<f64>());
            let psi = rng.gen_range(-0.999..0.999) * std::f64::consts::FRAC_PI_4;
            let len = rng.gen_range(0.5..5.0);
            (p, psi, len, i % 10 == 9)
        })
        .collect();
    let results: Result<Vec<(f64, Vec2, Vec2, f64)>, CausalError> = draws
        .par_iter()
        .map(|&(p, psi, len, null)| {
            if null {
                let fam = if psi < 0.0 { NullFamily::Minus } else { NullFamily::Plus };
                let c = integrate_null_curve(metric, p, fam, len)?;
                let chord = (c.points[c.points.len() - 1] - p).norm();
                Ok((c.length() / chord, p, c.velocities[0], len))
            } else {
                let v = BoostFrame::at(metric, &p).velocity(psi.tan().atanh());
                let speed = v.norm();
                let t = len / speed;
                let g = integrate_geodesic(metric, p, v, t, 1e-2 / speed)?;
                Ok((g.euclid_length / (g.end() - p).norm(), p, v, t))
            }
        })
        .collect();
    let results = results?;
    let (b, p, v, t) = results
        .into_iter()
        .fold((0.0, Vec2::zeros(), Vec2::zeros(), 0.0), |acc, r| {
            if r.0 > acc.0 {
                r
            } else {
                acc
            }
        });
    Ok(BEstimate {
        b,
        n_samples,
        witness_start: [p.x, p.y],
        witness_velocity: [v.x, v.y],
        witness_parameter: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{lorentz_norm, MetricSpec};

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn flat_plus_curve_is_straight() {
        let c = integrate_null_curve(&MetricSpec::flat(), Vec2::zeros(), NullFamily::Plus, 10.0)
            .unwrap();
        let end = c.points[c.points.len() - 1];
        assert!((end - Vec2::new(-S, S) * 10.0).norm() < 1e-10);
    }

    #[test]
    fn conformal_null_curves_match_flat() {
        for fam in [NullFamily::Minus, NullFamily::Plus] {
            let a = integrate_null_curve(&MetricSpec::flat(), Vec2::zeros(), fam, 5.0).unwrap();
            let b = integrate_null_curve(&MetricSpec::conformal(0.1), Vec2::zeros(), fam, 5.0)
                .unwrap();
            for (p, q) in a.points.iter().zip(&b.points) {
                assert!((p - q).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn sheared_null_residual() {
        let m = MetricSpec::sheared(0.2);
        let c = integrate_null_curve(&m, Vec2::new(0.1, 0.3), NullFamily::Minus, 20.0).unwrap();
        for (p, v) in c.points.iter().zip(&c.velocities) {
            assert!(lorentz_norm(&m, p, v).abs() < 1e-10);
        }
    }

    #[test]
    fn flat_cone_is_exact() {
        let c = estimate_cone(&MetricSpec::flat(), 20.0).unwrap();
        assert!((c.m_minus - Vec2::new(S, S)).norm() < 1e-12);
        assert!((c.m_plus - Vec2::new(-S, S)).norm() < 1e-12);
        assert!(estimate_cone(&MetricSpec::flat(), 5.0).is_err());
    }

    #[test]
    fn membership_examples() {
        let c = ConeEstimate::flat();
        assert!(cone_membership(&c, &Vec2::new(0.0, 1.0), 0.1));
        assert!((c.margin(&Vec2::new(0.0, 1.0)) - S).abs() < 1e-15);
        assert!(!cone_membership(&c, &c.m_plus, 1e-9));
        assert!(cone_membership(&c, &c.m_plus, 0.0));
        assert!(!cone_membership(&c, &Vec2::new(1.0, 0.0), 0.0));
        assert!(!cone_membership(&c, &Vec2::new(0.0, -1.0), 0.0));
    }

    #[test]
    fn direction_of_straight_and_tilted_rays() {
        let c = ConeEstimate::flat();
        let pts: Vec<Vec2> = (0..200).map(|i| Vec2::new(0.0, i as f64 * 0.1)).collect();
        let d = asymptotic_direction(&pts, &c);
        assert_eq!(d.alpha, Vec2::new(0.0, 1.0));
        assert_eq!(d.d, 0.0);
        let s3 = 3f64.sqrt();
        let g = integrate_geodesic(
            &MetricSpec::flat(),
            Vec2::zeros(),
            Vec2::new(1.0, 2.0) / s3,
            10.0,
            1e-2,
        )
        .unwrap();
        let d = asymptotic_direction(&g.points(), &c);
        assert!((d.alpha - Vec2::new(1.0, 2.0) / 5f64.sqrt()).norm() < 1e-12);
        assert!(d.d < 1e-10);
    }

    #[test]
    fn dyadic_schedule_size() {
        let n = 1000;
        let count = dyadic_pairs(n).count();
        assert!(count < 14 * n, "{count}");
        assert!(dyadic_pairs(n).all(|(i, j)| i < j && j < n));
    }

    #[test]
    fn flat_b_is_one() {
        let b = estimate_b(&MetricSpec::flat(), 100, 1).unwrap();
        assert!((b.b - 1.0).abs() < 1e-10, "{}", b.b);
        assert!(estimate_b(&MetricSpec::flat(), 0, 1).is_err());
    }
}
