//! Distance fields from a fan of geodesics.
//!
//! When `y` is a time function (`g11 > 0`) and the window lies above the
//! pole, every maximizer from the pole crosses each grid row exactly once.
//! Rays are launched from the pole, their crossings of the grid rows are
//! located to integrator accuracy, and each row is then filled by Hermite
//! interpolation of `d_p` in `x`, using `∂x d_p = −g(γ', ∂x)` at the
//! crossings.

use rayon::prelude::*;
use serde::Serialize;

use super::distance::{lorentz_distance_with, CausalStatus, DistanceOptions};
use super::field::{node_of, FieldKind, Resolution, ScalarField, Window};
use super::MaxDistError;
use crate::causal::{cone_membership, estimate_cone, ConeEstimate};
use crate::geodesic::{rk4_step, State};
use crate::metric::{signature_check, BoostFrame, Metric};
use crate::roots::brent;
use crate::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldMethod {
    /// Fan when applicable, per-node shooting otherwise.
    Auto,
    Fan,
    PerNode,
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldOptions {
    pub epsilon_margin: f64,
    /// Stable cone for the node mask; estimated at length 100 if absent.
    pub cone: Option<ConeEstimate>,
    pub method: FieldMethod,
    /// Euclidean step of the fan rays.
    pub fan_step: f64,
    /// Largest gap between neighbouring ray crossings on any row.
    pub knot_spacing: f64,
    pub distance: DistanceOptions,
}

impl Default for FieldOptions {
    fn default() -> Self {
        FieldOptions {
            epsilon_margin: 0.05,
            cone: None,
            method: FieldMethod::Auto,
            fan_step: 1e-2,
            knot_spacing: 0.1,
            distance: DistanceOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FieldDiagnostics {
    pub method: Option<FieldMethod>,
    pub rays: usize,
    pub masked_by_cone: usize,
    pub masked_unreached: usize,
    /// Why the fan was not used, if it was not.
    pub fallback_reason: Option<String>,
}

/// Crossing of one grid row by one ray.
#[derive(Clone, Copy, Debug)]
struct Crossing {
    x: f64,
    length: f64,
    slope: f64,
}

struct Ray {
    theta: f64,
    crossings: Vec<Option<Crossing>>,
}

fn trace_ray<M: Metric + ?Sized>(
    metric: &M,
    frame: &BoostFrame,
    p: &Vec2,
    theta: f64,
    rows: &[f64],
    step: f64,
) -> Ray {
    let v = frame.velocity(theta);
    let top = rows[rows.len() - 1];
    let mut crossings = vec![None; rows.len()];
    let h = if metric.is_constant() {
        1.01 * (top - p.y) / v.y
    } else {
        step / v.norm()
    };
    let mut cur = State { p: *p, v };
    let mut t = 0.0;
    let mut next_row = rows.partition_point(|y| *y <= p.y);
    let max_steps = (100.0 * (top - p.y + 1.0) / step).ceil() as usize + 10;
    for _ in 0..max_steps {
        if next_row >= rows.len() {
            break;
        }
        let next = rk4_step(metric, &cur, h);
        while next_row < rows.len() && rows[next_row] <= next.p.y {
            let y = rows[next_row];
            let s = if cur.p.y >= y {
                0.0
            } else {
                brent(|s| rk4_step(metric, &cur, s).p.y - y, 0.0, h, 1e-15, 100).unwrap_or(h)
            };
            let st = rk4_step(metric, &cur, s);
            let g = metric.matrix(&st.p);
            crossings[next_row] = Some(Crossing {
                x: st.p.x,
                length: t + s,
                slope: -(g * st.v).x,
            });
            next_row += 1;
        }
        if !(next.p.y > cur.p.y) || !next.p.x.is_finite() {
            break;
        }
        cur = next;
        t += h;
    }
    Ray { theta, crossings }
}

/// Hermite interpolation through `(x_k, f_k, f'_k)` by divided differences
/// on doubled nodes.
pub(crate) fn hermite(xs: &[f64], fs: &[f64], ds: &[f64], x: f64) -> f64 {
    let n = 2 * xs.len();
    let z: Vec<f64> = xs.iter().flat_map(|v| [*v, *v]).collect();
    let mut q: Vec<f64> = fs.iter().flat_map(|v| [*v, *v]).collect();
    let mut coef = Vec::with_capacity(n);
    coef.push(q[0]);
    for level in 1..n {
        for i in (level..n).rev() {
            q[i] = if level == 1 && i % 2 == 1 {
                ds[i / 2]
            } else {
                (q[i] - q[i - 1]) / (z[i] - z[i - level])
            };
        }
        coef.push(q[level]);
    }
    let mut r = coef[n - 1];
    for i in (0..n - 1).rev() {
        r = r * (x - z[i]) + coef[i];
    }
    r
}

fn fan_applicable<M: Metric + ?Sized>(metric: &M, p: &Vec2, window: &Window) -> Result<(), String> {
    if !(p.y < window.y0) {
        return Err("window is not strictly above the pole".into());
    }
    let report = signature_check(metric, 32).map_err(|e| e.to_string())?;
    if !(report.min_g11 > 0.0) {
        return Err("y is not a time function (g11 <= 0 somewhere)".into());
    }
    Ok(())
}

pub(crate) fn mask<M: Metric + ?Sized>(
    metric: &M,
    p: &Vec2,
    window: &Window,
    res: &Resolution,
    opts: &FieldOptions,
) -> Result<Vec<bool>, MaxDistError> {
    let cone = match opts.cone {
        Some(c) => c,
        None => estimate_cone(metric, 100.0).map_err(|e| MaxDistError::Numerical(e.to_string()))?,
    };
    Ok((0..res.len())
        .map(|k| {
            let z = node_of(window, res, k % res.nx, k / res.nx);
            cone_membership(&cone, &(z - p), opts.epsilon_margin)
        })
        .collect())
}

/// `d_p` on the window.
pub fn distance_field<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    window: Window,
    resolution: Resolution,
    epsilon_margin: f64,
) -> Result<ScalarField, MaxDistError> {
    let opts = FieldOptions {
        epsilon_margin,
        ..FieldOptions::default()
    };
    distance_field_with(metric, p, window, resolution, &opts).map(|(f, _)| f)
}

pub fn distance_field_with<M: Metric + ?Sized>(
    metric: &M,
    p: Vec2,
    window: Window,
    resolution: Resolution,
    opts: &FieldOptions,
) -> Result<(ScalarField, FieldDiagnostics), MaxDistError> {
    let valid = mask(metric, &p, &window, &resolution, opts)?;
    let mut diag = FieldDiagnostics {
        masked_by_cone: valid.iter().filter(|v| !**v).count(),
        ..FieldDiagnostics::default()
    };
    if !valid.iter().any(|v| *v) {
        return Err(MaxDistError::EmptyWindow);
    }
    let use_fan = match opts.method {
        FieldMethod::PerNode => false,
        FieldMethod::Fan => {
            fan_applicable(metric, &p, &window).map_err(MaxDistError::InvalidInput)?;
            true
        }
        FieldMethod::Auto => match fan_applicable(metric, &p, &window) {
            Ok(()) => true,
            Err(reason) => {
                diag.fallback_reason = Some(reason);
                false
            }
        },
    };
    let (values, valid) = if use_fan {
        match fan_values(metric, &p, &window, &resolution, valid.clone(), opts, &mut diag) {
            Ok(r) => {
                diag.method = Some(FieldMethod::Fan);
                r
            }
            Err(reason) if opts.method == FieldMethod::Auto => {
                diag.fallback_reason = Some(reason);
                diag.method = Some(FieldMethod::PerNode);
                per_node_values(metric, &p, &window, &resolution, valid, opts)
            }
            Err(reason) => return Err(MaxDistError::Numerical(reason)),
        }
    } else {
        diag.method = Some(FieldMethod::PerNode);
        per_node_values(metric, &p, &window, &resolution, valid, opts)
    };
    let reached = valid.iter().filter(|v| **v).count();
    diag.masked_unreached = resolution.len() - diag.masked_by_cone - reached;
    if reached == 0 {
        return Err(MaxDistError::EmptyWindow);
    }
    let mut field = ScalarField::from_values(window, resolution, FieldKind::Distance, values, valid);
    field.compute_gradients(metric);
    if field.valid_count() == 0 {
        return Err(MaxDistError::EmptyWindow);
    }
    Ok((field, diag))
}

fn per_node_values<M: Metric + ?Sized>(
    metric: &M,
    p: &Vec2,
    window: &Window,
    res: &Resolution,
    valid: Vec<bool>,
    opts: &FieldOptions,
) -> (Vec<f64>, Vec<bool>) {
    let out: Vec<(f64, bool)> = (0..res.len())
        .into_par_iter()
        .map(|k| {
            if !valid[k] {
                return (0.0, false);
            }
            let z = node_of(window, res, k % res.nx, k / res.nx);
            let r = lorentz_distance_with(metric, *p, z, &opts.distance);
            (r.value, r.status == CausalStatus::Timelike)
        })
        .collect();
    out.into_iter().unzip()
}

fn fan_values<M: Metric + ?Sized>(
    metric: &M,
    p: &Vec2,
    window: &Window,
    res: &Resolution,
    mut valid: Vec<bool>,
    opts: &FieldOptions,
    diag: &mut FieldDiagnostics,
) -> Result<(Vec<f64>, Vec<bool>), String> {
    let (nx, ny) = (res.nx, res.ny);
    let rows: Vec<f64> = (0..ny).map(|j| node_of(window, res, 0, j).y).collect();
    let xs: Vec<f64> = (0..nx).map(|i| node_of(window, res, i, 0).x).collect();
    let g = metric.matrix(p);
    let frame = BoostFrame::from_matrix(&g);
    let theta_cap = opts.distance.theta_max;

    // Valid x-range per row.
    let mut need: Vec<Option<(f64, f64)>> = vec![None; ny];
    let (mut th_lo, mut th_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..ny {
        for i in 0..nx {
            if valid[j * nx + i] {
                let x = xs[i];
                need[j] = Some(match need[j] {
                    None => (x, x),
                    Some((a, b)) => (a.min(x), b.max(x)),
                });
                if let Some(t) = frame.rapidity(&g, &(Vec2::new(x, rows[j]) - p)) {
                    th_lo = th_lo.min(t);
                    th_hi = th_hi.max(t);
                }
            }
        }
    }
    if !th_lo.is_finite() {
        return Err("no valid node has a timelike chord".into());
    }
    let pad = 0.25 * (th_hi - th_lo) + 1e-6;
    let (mut th_lo, mut th_hi) = ((th_lo - pad).max(-theta_cap), (th_hi + pad).min(theta_cap));
    let trace = |t: f64| trace_ray(metric, &frame, p, t, &rows, opts.fan_step);

    let covers = |ray: &Ray, left: bool| {
        (0..ny).all(|j| match (need[j], ray.crossings[j]) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some((a, b)), Some(c)) => {
                if left {
                    c.x <= a
                } else {
                    c.x >= b
                }
            }
        })
    };
    let mut lo_ray = trace(th_lo);
    let mut widen = pad;
    while !covers(&lo_ray, true) && th_lo > -theta_cap {
        widen *= 2.0;
        th_lo = (th_lo - widen).max(-theta_cap);
        lo_ray = trace(th_lo);
    }
    let mut hi_ray = trace(th_hi);
    let mut widen = pad;
    while !covers(&hi_ray, false) && th_hi < theta_cap {
        widen *= 2.0;
        th_hi = (th_hi + widen).min(theta_cap);
        hi_ray = trace(th_hi);
    }

    let initial = 9;
    let mut rays: Vec<Ray> = vec![lo_ray];
    let inner: Vec<Ray> = (1..initial - 1)
        .into_par_iter()
        .map(|k| trace(th_lo + (th_hi - th_lo) * k as f64 / (initial - 1) as f64))
        .collect();
    rays.extend(inner);
    rays.push(hi_ray);

    // Only gaps near the needed part of a row matter; the interpolation
    // stencil reaches two crossings beyond it.
    let reach = 3.0 * opts.knot_spacing;
    let gap = |a: &Ray, b: &Ray| {
        (0..ny)
            .filter_map(|j| {
                let (lo, hi) = need[j]?;
                match (a.crossings[j], b.crossings[j]) {
                    (Some(u), Some(v)) => {
                        let (l, r) = (u.x.min(v.x), u.x.max(v.x));
                        (r >= lo - reach && l <= hi + reach).then_some(r - l)
                    }
                    (None, None) => None,
                    _ => Some(f64::INFINITY),
                }
            })
            .fold(0.0, f64::max)
    };
    for _ in 0..40 {
        let splits: Vec<f64> = rays
            .windows(2)
            .filter(|w| gap(&w[0], &w[1]) > opts.knot_spacing && w[1].theta - w[0].theta > 1e-12)
            .map(|w| 0.5 * (w[0].theta + w[1].theta))
            .collect();
        if splits.is_empty() {
            break;
        }
        if rays.len() + splits.len() > 20_000 {
            return Err("fan refinement did not converge".into());
        }
        let new: Vec<Ray> = splits.into_par_iter().map(trace).collect();
        rays.extend(new);
        rays.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    }
    diag.rays = rays.len();

    let mut values = vec![0.0; nx * ny];
    for j in 0..ny {
        let row: Vec<Crossing> = rays.iter().filter_map(|r| r.crossings[j]).collect();
        if row.windows(2).any(|w| !(w[1].x > w[0].x)) {
            return Err(format!("fan rays cross before row y = {}", rows[j]));
        }
        for i in 0..nx {
            let k = j * nx + i;
            if !valid[k] {
                continue;
            }
            let x = xs[i];
            let pos = row.partition_point(|c| c.x <= x);
            if pos == 0 || pos == row.len() || row.len() < 4 {
                valid[k] = false;
                continue;
            }
            let start = pos.saturating_sub(2).min(row.len() - 4);
            let st = &row[start..start + 4];
            let px: Vec<f64> = st.iter().map(|c| c.x).collect();
            let pf: Vec<f64> = st.iter().map(|c| c.length).collect();
            let pd: Vec<f64> = st.iter().map(|c| c.slope).collect();
            values[k] = hermite(&px, &pf, &pd, x);
        }
    }
    Ok((values, valid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxdist::{lorentz_distance, verify_eikonal};
    use crate::metric::MetricSpec;

    #[test]
    fn hermite_is_exact_on_degree_seven() {
        let f = |x: f64| x.powi(7) - 3.0 * x.powi(4) + x;
        let d = |x: f64| 7.0 * x.powi(6) - 12.0 * x.powi(3) + 1.0;
        let xs = [0.1, 0.35, 0.4, 0.8];
        let fs: Vec<f64> = xs.iter().map(|x| f(*x)).collect();
        let ds: Vec<f64> = xs.iter().map(|x| d(*x)).collect();
        assert!((hermite(&xs, &fs, &ds, 0.5) - f(0.5)).abs() < 1e-13);
    }

    #[test]
    fn flat_field_matches_closed_form() {
        let w = Window::new(-0.5, 0.5, 2.0, 3.0).unwrap();
        let (f, diag) = distance_field_with(
            &MetricSpec::flat(),
            Vec2::zeros(),
            w,
            Resolution::square(33),
            &FieldOptions::default(),
        )
        .unwrap();
        assert_eq!(diag.method, Some(FieldMethod::Fan));
        for (i, j, z) in f.nodes() {
            let k = f.index(i, j);
            assert!(f.valid[k]);
            assert!((f.values[k] - (z.y * z.y - z.x * z.x).sqrt()).abs() < 1e-8);
        }
        let k = f.index(16, 16);
        assert!((f.gradient[k] - Vec2::new(0.0, 1.0)).norm() < 1e-6);
        let r = verify_eikonal(&f, &MetricSpec::flat());
        assert!(r.max_residual < 1e-4, "{}", r.max_residual);
    }

    #[test]
    fn straddling_window_is_masked_not_rejected() {
        let w = Window::new(0.5, 2.5, 1.0, 2.0).unwrap();
        let f = distance_field(&MetricSpec::flat(), Vec2::zeros(), w, Resolution::square(17), 0.05)
            .unwrap();
        let k_out = f.index(16, 0);
        let k_in = f.index(0, 16);
        assert!(!f.valid[k_out]);
        assert!(f.valid[k_in]);
    }

    #[test]
    fn empty_window_is_an_error() {
        let w = Window::new(5.0, 6.0, 0.0, 1.0).unwrap();
        let e = distance_field(&MetricSpec::flat(), Vec2::zeros(), w, Resolution::square(9), 0.05);
        assert!(matches!(e, Err(MaxDistError::EmptyWindow)));
    }

    #[test]
    fn sheared_fan_agrees_with_per_node_shooting() {
        let m = MetricSpec::sheared(0.2);
        let w = Window::new(-0.3, 0.7, 2.0, 3.0).unwrap();
        let res = Resolution::square(9);
        let (f, d) =
            distance_field_with(&m, Vec2::zeros(), w, res, &FieldOptions::default()).unwrap();
        assert_eq!(d.method, Some(FieldMethod::Fan));
        for (i, j, z) in f.nodes() {
            let k = f.index(i, j);
            if f.valid[k] && (i + j) % 3 == 0 {
                let exact = lorentz_distance(&m, Vec2::zeros(), z).value;
                assert!((f.values[k] - exact).abs() < 1e-8, "{z:?}: {} vs {exact}", f.values[k]);
            }
        }
    }
}
