use serde::Serialize;

use super::GeodesicError;
use crate::metric::{christoffel, inner_with, Metric};
use crate::Vec2;

/// Default fixed affine step.
pub const DEFAULT_STEP: f64 = 1e-3;

const DRIFT_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct State {
    pub p: Vec2,
    pub v: Vec2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub p: [f64; 2],
    pub v: [f64; 2],
}

impl Sample {
    pub fn point(&self) -> Vec2 {
        Vec2::new(self.p[0], self.p[1])
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.v[0], self.v[1])
    }

    pub(crate) fn new(t: f64, s: &State) -> Self {
        Sample {
            t,
            p: [s.p.x, s.p.y],
            v: [s.v.x, s.v.y],
        }
    }
}

/// A sampled geodesic.
#[derive(Clone, Debug, Serialize)]
pub struct Geodesic {
    pub samples: Vec<Sample>,
    /// `∫ √|g(γ', γ')| dt`.
    pub g_length: f64,
    pub euclid_length: f64,
    pub domain: (f64, f64),
    /// Largest `|g(γ',γ') − g(v₀,v₀)|` over the samples.
    pub norm_drift: f64,
}

impl Geodesic {
    pub fn start(&self) -> Vec2 {
        self.samples[0].point()
    }

    pub fn end(&self) -> Vec2 {
        self.samples[self.samples.len() - 1].point()
    }

    pub fn end_velocity(&self) -> Vec2 {
        self.samples[self.samples.len() - 1].velocity()
    }

    pub fn points(&self) -> Vec<Vec2> {
        self.samples.iter().map(Sample::point).collect()
    }

    /// Cubic Hermite interpolation of the position at parameter `t`.
    pub fn point_at(&self, t: f64) -> Vec2 {
        let s = &self.samples;
        let t = t.clamp(self.domain.0, self.domain.1);
        let i = s.partition_point(|x| x.t <= t).clamp(1, s.len() - 1);
        let (a, b) = (&s[i - 1], &s[i]);
        let h = b.t - a.t;
        if h == 0.0 {
            return a.point();
        }
        let u = (t - a.t) / h;
        let (u2, u3) = (u * u, u * u * u);
        a.point() * (2.0 * u3 - 3.0 * u2 + 1.0)
            + a.velocity() * (h * (u3 - 2.0 * u2 + u))
            + b.point() * (-2.0 * u3 + 3.0 * u2)
            + b.velocity() * (h * (u3 - u2))
    }
}

/// `−Γ^k_ij v^i v^j`.
#[inline]
pub fn acceleration<M: Metric + ?Sized>(metric: &M, p: &Vec2, v: &Vec2) -> Vec2 {
    if metric.is_constant() {
        return Vec2::zeros();
    }
    let c = christoffel(&metric.components(p));
    let q = |k: usize| {
        c[k][0][0] * v.x * v.x + 2.0 * c[k][0][1] * v.x * v.y + c[k][1][1] * v.y * v.y
    };
    Vec2::new(-q(0), -q(1))
}

/// One classical Runge–Kutta step of the geodesic equation.
#[inline]
pub fn rk4_step<M: Metric + ?Sized>(metric: &M, s: &State, h: f64) -> State {
    if metric.is_constant() {
        return State {
            p: s.p + s.v * h,
            v: s.v,
        };
    }
    let k1p = s.v;
    let k1v = acceleration(metric, &s.p, &s.v);
    let p2 = s.p + k1p * (0.5 * h);
    let v2 = s.v + k1v * (0.5 * h);
    let k2v = acceleration(metric, &p2, &v2);
    let p3 = s.p + v2 * (0.5 * h);
    let v3 = s.v + k2v * (0.5 * h);
    let k3v = acceleration(metric, &p3, &v3);
    let p4 = s.p + v3 * h;
    let v4 = s.v + k3v * h;
    let k4v = acceleration(metric, &p4, &v4);
    State {
        p: s.p + (k1p + v2 * 2.0 + v3 * 2.0 + v4) * (h / 6.0),
        v: s.v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0),
    }
}

/// Steps from `s` with fixed step `h`, calling `visit(k, prev, next)` after
/// each step until it returns false or `max_steps` is reached. Returns the
/// last state and the number of steps taken.
pub fn trace<M, F>(metric: &M, s: State, h: f64, max_steps: usize, mut visit: F) -> (State, usize)
where
    M: Metric + ?Sized,
    F: FnMut(usize, &State, &State) -> bool,
{
    let mut cur = s;
    for k in 0..max_steps {
        let next = rk4_step(metric, &cur, h);
        let go = visit(k + 1, &cur, &next);
        cur = next;
        if !go {
            return (cur, k + 1);
        }
    }
    (cur, max_steps)
}

/// Composite Simpson rule on equally spaced values, trapezoid on a leftover
/// interval.
pub(crate) fn quadrature(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let intervals = n - 1;
    let even = intervals - intervals % 2;
    let mut s = 0.0;
    let mut i = 0;
    while i < even {
        s += values[i] + 4.0 * values[i + 1] + values[i + 2];
        i += 2;
    }
    s *= h / 3.0;
    if even < intervals {
        s += 0.5 * h * (values[n - 2] + values[n - 1]);
    }
    s
}

/// Integrates from `(p, v)` over affine parameter `[0, horizon]` with a
/// fixed step no larger than `step`.
pub fn integrate_geodesic<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    v: Vec2,
    horizon: f64,
    step: f64,
) -> Result<Geodesic, GeodesicError> {
    if v.norm() == 0.0 || !v.iter().all(|c| c.is_finite()) {
        return Err(GeodesicError::InvalidInput("initial velocity must be nonzero".into()));
    }
    if !(step > 0.0) || !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(GeodesicError::InvalidInput(format!(
            "need step > 0 and finite horizon >= 0, got step {step}, horizon {horizon}"
        )));
    }
    let n = (horizon / step).ceil() as usize;
    let h = if n == 0 { 0.0 } else { horizon / n as f64 };
    let start = State { p, v };
    let q0 = inner_with(&metric.matrix(&p), &v, &v);
    let mut samples = Vec::with_capacity(n + 1);
    samples.push(Sample::new(0.0, &start));
    let mut g_speed = vec![q0.abs().sqrt()];
    let mut e_speed = vec![v.norm()];
    let mut drift: f64 = 0.0;
    let mut failure = None;
    trace(metric, start, h, n, |k, _, next| {
        let q = inner_with(&metric.matrix(&next.p), &next.v, &next.v);
        let d = (q - q0).abs();
        drift = drift.max(d);
        samples.push(Sample::new(k as f64 * h, next));
        g_speed.push(q.abs().sqrt());
        e_speed.push(next.v.norm());
        if d > DRIFT_LIMIT || !d.is_finite() {
            failure = Some(GeodesicError::Integration {
                t: k as f64 * h,
                drift: d,
            });
            return false;
        }
        true
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if let Some(last) = samples.last_mut() {
        last.t = horizon;
    }
    Ok(Geodesic {
        g_length: quadrature(&g_speed, h),
        euclid_length: quadrature(&e_speed, h),
        samples,
        domain: (0.0, horizon),
        norm_drift: drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpec;

    #[test]
    fn flat_vertical_segment() {
        let g = integrate_geodesic(
            &MetricSpec::flat(),
            Vec2::zeros(),
            Vec2::new(0.0, 1.0),
            5.0,
            1e-3,
        )
        .unwrap();
        assert!((g.end() - Vec2::new(0.0, 5.0)).norm() < 1e-11);
        assert!((g.g_length - 5.0).abs() < 1e-11);
        assert!((g.euclid_length - 5.0).abs() < 1e-11);
    }

    #[test]
    fn flat_tilted_endpoint() {
        let s3 = 3f64.sqrt();
        let g = integrate_geodesic(
            &MetricSpec::flat(),
            Vec2::zeros(),
            Vec2::new(1.0, 2.0) / s3,
            s3,
            1e-3,
        )
        .unwrap();
        assert!((g.end() - Vec2::new(1.0, 2.0)).norm() < 1e-11);
        assert!((g.g_length - s3).abs() < 1e-12);
    }

    #[test]
    fn conformal_endpoint_converges_at_fourth_order() {
        let m = MetricSpec::conformal(0.1);
        let v = Vec2::new(0.3, 1.0);
        let end = |h: f64| {
            integrate_geodesic(&m, Vec2::new(0.1, 0.2), v, 4.0, h)
                .unwrap()
                .end()
        };
        let (a, b, c) = (end(0.002), end(0.001), end(0.0005));
        let ratio = (a - b).norm() / (b - c).norm();
        assert!((ratio - 16.0).abs() < 3.0, "ratio {ratio} {} {}", (a - b).norm(), (b - c).norm());
    }

    #[test]
    fn quadrature_is_exact_on_cubics() {
        let h = 0.1;
        let vals: Vec<f64> = (0..11).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((quadrature(&vals, h) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn hermite_interpolation_is_accurate() {
        let m = MetricSpec::sheared(0.2);
        let g = integrate_geodesic(&m, Vec2::zeros(), Vec2::new(0.2, 1.0), 2.0, 0.05).unwrap();
        let fine = integrate_geodesic(&m, Vec2::zeros(), Vec2::new(0.2, 1.0), 1.025, 0.001).unwrap();
        assert!((g.point_at(1.025) - fine.end()).norm() < 1e-6);
    }

    #[test]
    fn rejects_bad_input() {
        let m = MetricSpec::flat();
        assert!(integrate_geodesic(&m, Vec2::zeros(), Vec2::zeros(), 1.0, 1e-3).is_err());
        assert!(integrate_geodesic(&m, Vec2::zeros(), Vec2::new(0.0, 1.0), 1.0, 0.0).is_err());
    }
}
