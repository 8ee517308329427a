use rayon::prelude::*;
use serde::Serialize;

use super::integrate::{acceleration, State, DEFAULT_STEP};
use super::GeodesicError;
use crate::metric::{gauss_curvature, inner_with, BoostFrame, Metric};
use crate::roots::brent;
use crate::Vec2;

/// Sign in `J'' + σ·K·J = 0` along unit timelike geodesics.
///
/// Fixed by `tests::sign_matches_geodesic_refocusing`: on
/// [`ConstantCurvatureMetric`](crate::metric::ConstantCurvatureMetric) with
/// focusing `k > 0`, neighbouring geodesics from one point meet again at
/// proper time `π/√k` while Brioschi gives `K = −k`.
pub const JACOBI_SIGN: f64 = -1.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjugateReport {
    /// First zero of `J` after 0, if any, located to 1e−8.
    pub first_conjugate: Option<f64>,
    pub horizon: f64,
    /// `min |J(t)|/t` over the scanned interval (1 in flat space).
    pub jacobi_min_abs: f64,
}

#[derive(Clone, Copy, Debug)]
struct Aug {
    s: State,
    j: f64,
    dj: f64,
}

fn deriv<M: Metric + ?Sized>(metric: &M, a: &Aug) -> (Vec2, Vec2, f64, f64) {
    let k = if metric.is_constant() {
        0.0
    } else {
        gauss_curvature(&metric.components(&a.s.p))
    };
    (
        a.s.v,
        acceleration(metric, &a.s.p, &a.s.v),
        a.dj,
        -JACOBI_SIGN * k * a.j,
    )
}

fn aug_step<M: Metric + ?Sized>(metric: &M, a: &Aug, h: f64) -> Aug {
    let shift = |a: &Aug, d: &(Vec2, Vec2, f64, f64), c: f64| Aug {
        s: State {
            p: a.s.p + d.0 * c,
            v: a.s.v + d.1 * c,
        },
        j: a.j + d.2 * c,
        dj: a.dj + d.3 * c,
    };
    let k1 = deriv(metric, a);
    let k2 = deriv(metric, &shift(a, &k1, 0.5 * h));
    let k3 = deriv(metric, &shift(a, &k2, 0.5 * h));
    let k4 = deriv(metric, &shift(a, &k3, h));
    let w = h / 6.0;
    Aug {
        s: State {
            p: a.s.p + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * w,
            v: a.s.v + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * w,
        },
        j: a.j + (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2) * w,
        dj: a.dj + (k1.3 + 2.0 * k2.3 + 2.0 * k3.3 + k4.3) * w,
    }
}

pub fn jacobi_conjugate_scan<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    v: Vec2,
    horizon: f64,
) -> Result<ConjugateReport, GeodesicError> {
    jacobi_conjugate_scan_with_step(metric, p, v, horizon, DEFAULT_STEP)
}

pub fn jacobi_conjugate_scan_with_step<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    v: Vec2,
    horizon: f64,
    step: f64,
) -> Result<ConjugateReport, GeodesicError> {
    let g = metric.matrix(&p);
    let q = inner_with(&g, &v, &v);
    if !(q < 0.0) {
        return Err(GeodesicError::InvalidInput(format!(
            "Jacobi scan needs a timelike velocity, g(v,v) = {q}"
        )));
    }
    if (q + 1.0).abs() > 1e-6 {
        return Err(GeodesicError::InvalidInput(format!(
            "Jacobi scan needs g(v,v) = -1, got {q}"
        )));
    }
    if !(step > 0.0) || !(horizon >= 0.0) {
        return Err(GeodesicError::InvalidInput("need step > 0 and horizon >= 0".into()));
    }
    let n = (horizon / step).ceil() as usize;
    if n == 0 {
        return Ok(ConjugateReport {
            first_conjugate: None,
            horizon,
            jacobi_min_abs: 1.0,
        });
    }
    let h = horizon / n as f64;
    let mut cur = Aug {
        s: State { p, v },
        j: 0.0,
        dj: 1.0,
    };
    let mut min_ratio = f64::INFINITY;
    for k in 0..n {
        let next = aug_step(metric, &cur, h);
        let t1 = (k + 1) as f64 * h;
        let qn = inner_with(&metric.matrix(&next.s.p), &next.s.v, &next.s.v);
        if (qn - q).abs() > 1e-6 || !qn.is_finite() {
            return Err(GeodesicError::Integration {
                t: t1,
                drift: (qn - q).abs(),
            });
        }
        if next.j <= 0.0 {
            let start = cur;
            let s = brent(|s| aug_step(metric, &start, s).j, 0.0, h, 1e-12, 100)
                .unwrap_or(h);
            return Ok(ConjugateReport {
                first_conjugate: Some(k as f64 * h + s),
                horizon,
                jacobi_min_abs: 0.0,
            });
        }
        min_ratio = min_ratio.min(next.j / t1);
        cur = next;
    }
    Ok(ConjugateReport {
        first_conjugate: None,
        horizon,
        jacobi_min_abs: min_ratio,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoleReport {
    pub is_pole_up_to_horizon: bool,
    pub n_directions: usize,
    pub horizon: f64,
    /// Direction with the earliest conjugate point, or the smallest
    /// `min |J|/t` if none was found.
    pub worst_direction: Option<[f64; 2]>,
    pub first_conjugate: Option<f64>,
    pub jacobi_min_abs: f64,
}

pub fn pole_check<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    n_directions: usize,
    horizon: f64,
) -> Result<PoleReport, GeodesicError> {
    pole_check_with_step(metric, p, n_directions, horizon, DEFAULT_STEP)
}

/// Scans `n_directions` future unit vectors at cone angles
/// `ψ_j = −π/4 + (j + ½)·π/(2n)` in the boost frame, each both forwards and
/// time-reflected.
pub fn pole_check_with_step<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    n_directions: usize,
    horizon: f64,
    step: f64,
) -> Result<PoleReport, GeodesicError> {
    if n_directions < 8 {
        return Err(GeodesicError::InvalidInput(format!(
            "pole_check needs at least 8 directions, got {n_directions}"
        )));
    }
    let frame = BoostFrame::at(metric, &p);
    let n = n_directions;
    let dirs: Vec<Vec2> = (0..2 * n)
        .map(|i| {
            let j = i % n;
            let psi = -std::f64::consts::FRAC_PI_4
                + (j as f64 + 0.5) * std::f64::consts::FRAC_PI_2 / n as f64;
            let v = frame.velocity(psi.tan().atanh());
            if i < n {
                v
            } else {
                -v
            }
        })
        .collect();
    let reports: Vec<Result<ConjugateReport, GeodesicError>> = dirs
        .par_iter()
        .map(|v| jacobi_conjugate_scan_with_step(metric, p, *v, horizon, step))
        .collect();
    let mut worst: Option<(usize, ConjugateReport)> = None;
    for (i, r) in reports.into_iter().enumerate() {
        let r = r?;
        let key = |r: &ConjugateReport| (r.first_conjugate.unwrap_or(f64::INFINITY), r.jacobi_min_abs);
        let better = match &worst {
            None => true,
            Some((_, w)) => key(&r) < key(w),
        };
        if better {
            worst = Some((i, r));
        }
    }
    let (i, w) = worst.expect("at least 16 scans");
    Ok(PoleReport {
        is_pole_up_to_horizon: w.first_conjugate.is_none(),
        n_directions,
        horizon,
        worst_direction: Some([dirs[i].x, dirs[i].y]),
        first_conjugate: w.first_conjugate,
        jacobi_min_abs: w.jacobi_min_abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::integrate::rk4_step;
    use crate::metric::{ConstantCurvatureMetric, MetricSpec};

    #[test]
    fn flat_has_no_conjugate_points() {
        let r = jacobi_conjugate_scan(
            &MetricSpec::flat(),
            Vec2::zeros(),
            Vec2::new(0.0, 1.0),
            100.0,
        )
        .unwrap();
        assert_eq!(r.first_conjugate, None);
        assert!((r.jacobi_min_abs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_focusing_reproduces_sine_zeros() {
        for k in [1.0f64, 4.0, 9.0] {
            let m = ConstantCurvatureMetric::new(k);
            let r = jacobi_conjugate_scan(&m, Vec2::zeros(), Vec2::new(0.0, 1.0), 4.0).unwrap();
            let t = r.first_conjugate.expect("conjugate point");
            assert!((t - std::f64::consts::PI / k.sqrt()).abs() < 1e-6, "k={k}: {t}");
        }
        let m = ConstantCurvatureMetric::new(-1.0);
        let r = jacobi_conjugate_scan(&m, Vec2::zeros(), Vec2::new(0.0, 1.0), 5.0).unwrap();
        assert_eq!(r.first_conjugate, None);
    }

    /// Independent of the Jacobi equation: launch two geodesics from the same
    /// point with slightly different rapidities and find where their
    /// separation vanishes again.
    #[test]
    fn sign_matches_geodesic_refocusing() {
        let k = 4.0f64;
        let m = ConstantCurvatureMetric::new(k);
        let frame = BoostFrame::at(&m, &Vec2::zeros());
        let h = 1e-3;
        let (mut a, mut b) = (
            State { p: Vec2::zeros(), v: frame.velocity(0.0) },
            State { p: Vec2::zeros(), v: frame.velocity(1e-6) },
        );
        let mut prev_sep = 0.0;
        let mut meet = None;
        for i in 0..4000 {
            a = rk4_step(&m, &a, h);
            b = rk4_step(&m, &b, h);
            let sep = b.p.x - a.p.x;
            if i > 10 && sep * prev_sep < 0.0 {
                meet = Some(i as f64 * h + h * prev_sep / (prev_sep - sep));
                break;
            }
            prev_sep = sep;
        }
        let meet = meet.expect("geodesics refocus");
        assert!((meet - std::f64::consts::PI / k.sqrt()).abs() < 1e-3, "meet {meet}");
        let scan = jacobi_conjugate_scan(&m, Vec2::zeros(), frame.velocity(0.0), 3.0).unwrap();
        assert!((scan.first_conjugate.unwrap() - meet).abs() < 1e-3);
        assert_eq!(JACOBI_SIGN, -1.0);
    }

    #[test]
    fn flat_is_a_pole() {
        let r = pole_check(&MetricSpec::flat(), Vec2::zeros(), 16, 30.0).unwrap();
        assert!(r.is_pole_up_to_horizon);
        let r = pole_check(&MetricSpec::flat(), Vec2::zeros(), 16, 0.0).unwrap();
        assert!(r.is_pole_up_to_horizon);
        assert!(pole_check(&MetricSpec::flat(), Vec2::zeros(), 4, 1.0).is_err());
    }

    #[test]
    fn rejects_non_unit_velocity() {
        let m = MetricSpec::flat();
        assert!(jacobi_conjugate_scan(&m, Vec2::zeros(), Vec2::new(0.0, 2.0), 1.0).is_err());
        assert!(jacobi_conjugate_scan(&m, Vec2::zeros(), Vec2::new(1.0, 0.0), 1.0).is_err());
    }
}
