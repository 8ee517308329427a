use serde::Serialize;

use super::poles::PoleSequence;
use super::BusemannError;
use crate::causal::estimate_cone;
use crate::maxdist::{
    distance_field_with, verify_eikonal, EikonalReport, FieldKind, FieldOptions, MaxDistError,
    Resolution, ScalarField, Window,
};
use crate::metric::Metric;
use crate::Vec2;

#[derive(Clone, Debug, Serialize)]
pub struct BusemannOptions {
    pub field: FieldOptions,
    /// Anchoring starts once the raw centre value moves by more than this
    /// multiple of the tolerance between iterations.
    pub anchor_factor: f64,
    /// Return the last iterate instead of failing when the sequence runs out.
    pub allow_unconverged: bool,
}

impl Default for BusemannOptions {
    fn default() -> Self {
        BusemannOptions {
            field: FieldOptions::default(),
            anchor_factor: 10.0,
            allow_unconverged: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GapRecord {
    pub iteration: usize,
    pub time: f64,
    /// `‖u_i − u_{i−1}‖∞` on the common valid mask; NaN for the first.
    pub value_gap: f64,
    pub gradient_gap: f64,
    /// Raw `u_i` at the window centre.
    pub center_value: f64,
    pub anchored: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BusemannField {
    pub field: ScalarField,
    pub direction: Vec2,
    pub history: Vec<GapRecord>,
    pub iterations_used: usize,
    pub anchored: bool,
    pub tol: f64,
    pub converged: bool,
    pub eikonal: EikonalReport,
}

impl std::ops::Deref for BusemannField {
    type Target = ScalarField;

    fn deref(&self) -> &ScalarField {
        &self.field
    }
}

/// `t − d_p` as a potential.
fn potential(d: ScalarField, t: f64) -> ScalarField {
    let mut u = d;
    u.kind = FieldKind::Potential;
    for (v, ok) in u.values.iter_mut().zip(&u.valid) {
        *v = if *ok { t - *v } else { 0.0 };
    }
    for w in u.differential.iter_mut() {
        *w = -*w;
    }
    u
}

fn shift(u: &mut ScalarField, c: f64) {
    for (v, ok) in u.values.iter_mut().zip(&u.valid) {
        if *ok {
            *v -= c;
        }
    }
}

fn center_value(u: &ScalarField) -> Option<f64> {
    let c = u.window.center();
    u.node_value(&c).or_else(|| u.value_at(&c))
}

pub fn busemann_field<M: Metric + ?Sized>(
    metric: &M,
    seq: &PoleSequence,
    window: Window,
    resolution: Resolution,
    tol: f64,
) -> Result<BusemannField, BusemannError> {
    busemann_field_with(metric, seq, window, resolution, tol, &BusemannOptions::default())
}

pub fn busemann_field_with<M: Metric + ?Sized>(
    metric: &M,
    seq: &PoleSequence,
    window: Window,
    resolution: Resolution,
    tol: f64,
    opts: &BusemannOptions,
) -> Result<BusemannField, BusemannError> {
    if !(tol > 0.0) {
        return Err(BusemannError::InvalidInput(format!("tol must be positive, got {tol}")));
    }
    let mut fopts = opts.field.clone();
    if fopts.cone.is_none() {
        fopts.cone = Some(estimate_cone(metric, 100.0).map_err(|e| BusemannError::Cone(e.to_string()))?);
    }
    let mut history = Vec::new();
    let mut prev: Option<ScalarField> = None;
    let mut prev_center: Option<f64> = None;
    let mut anchored = false;
    let mut last_gaps = (f64::NAN, f64::NAN);
    for (i, (&p, &t)) in seq.poles.iter().zip(&seq.times).enumerate() {
        let d = match distance_field_with(metric, p, window, resolution, &fopts) {
            Ok((d, _)) => d,
            Err(MaxDistError::EmptyWindow) if i + 1 < seq.poles.len() => continue,
            Err(e) => return Err(e.into()),
        };
        let mut u = potential(d, t);
        let c = center_value(&u).ok_or(MaxDistError::MaskMargin {
            x: window.center().x,
            y: window.center().y,
        })?;
        if let Some(pc) = prev_center {
            if !anchored && (c - pc).abs() > opts.anchor_factor * tol {
                anchored = true;
                if let Some(pf) = prev.as_mut() {
                    shift(pf, pc);
                }
            }
        }
        if anchored {
            shift(&mut u, c);
        }
        let gaps = prev.as_ref().map(|pf| u.sup_gap(pf));
        let (gv, gg) = gaps.unwrap_or((f64::NAN, f64::NAN));
        history.push(GapRecord {
            iteration: i,
            time: t,
            value_gap: gv,
            gradient_gap: gg,
            center_value: c,
            anchored,
        });
        last_gaps = (gv, gg);
        prev_center = Some(c);
        let done = gaps.is_some_and(|(a, b)| a < tol && b < tol);
        prev = Some(u);
        if done {
            break;
        }
    }
    let Some(field) = prev else {
        return Err(MaxDistError::EmptyWindow.into());
    };
    let converged = last_gaps.0 < tol && last_gaps.1 < tol;
    if !converged && !opts.allow_unconverged {
        return Err(BusemannError::NoConvergence { tol, last_gaps });
    }
    let eikonal = verify_eikonal(&field, metric);
    Ok(BusemannField {
        field,
        direction: seq.direction,
        iterations_used: history.len(),
        history,
        anchored,
        tol,
        converged,
        eikonal,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicityReport {
    /// Sup of `|∇u(x + e) − ∇u(x)|` over both shifts.
    pub defect: f64,
    pub defect_x: Option<f64>,
    pub defect_y: Option<f64>,
    pub pairs: usize,
    /// Whether shifted nodes fall exactly on the grid.
    pub node_aligned: bool,
    /// Copied from the field: an unconverged field is flagged here.
    pub converged: bool,
}

/// Compares gradients at lattice-shifted interior nodes.
pub fn check_periodicity(field: &BusemannField) -> Result<PeriodicityReport, BusemannError> {
    let f = &field.field;
    let (nx, ny) = (f.resolution.nx, f.resolution.ny);
    let mut aligned = true;
    let mut pairs = 0;
    let mut defect_for = |e: Vec2, h: f64, n_cells: usize| -> Option<f64> {
        let steps = 1.0 / h;
        let off = steps.round() as usize;
        let on_grid = (steps - steps.round()).abs() < 1e-9 && off < n_cells;
        let mut d: Option<f64> = None;
        for (i, j, x) in f.nodes() {
            if !f.is_interior(i, j) {
                continue;
            }
            let other = if on_grid {
                let (a, b) = if e.x > 0.0 { (i + off, j) } else { (i, j + off) };
                if a >= nx || b >= ny || !f.is_interior(a, b) {
                    continue;
                }
                f.gradient[f.index(a, b)]
            } else {
                match f.gradient_at(&(x + e)) {
                    Some(g) => g,
                    None => continue,
                }
            };
            aligned &= on_grid;
            pairs += 1;
            let gap = (other - f.gradient[f.index(i, j)]).norm();
            d = Some(d.map_or(gap, |v: f64| v.max(gap)));
        }
        d
    };
    let dx = if f.window.width() > 1.0 {
        defect_for(Vec2::new(1.0, 0.0), f.hx(), nx)
    } else {
        None
    };
    let dy = if f.window.height() > 1.0 {
        defect_for(Vec2::new(0.0, 1.0), f.hy(), ny)
    } else {
        None
    };
    if dx.is_none() && dy.is_none() {
        return Err(BusemannError::WindowTooSmall);
    }
    Ok(PeriodicityReport {
        defect: dx.unwrap_or(0.0).max(dy.unwrap_or(0.0)),
        defect_x: dx,
        defect_y: dy,
        pairs,
        node_aligned: aligned,
        converged: field.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::busemann::{build_pole_sequence_with, PoleOptions, Schedule};
    use crate::causal::ConeEstimate;
    use crate::geodesic::integrate_geodesic;
    use crate::maxdist::hessian_probe;
    use crate::metric::MetricSpec;

    fn flat_sequence(alpha: Vec2, p: Vec2, n: usize) -> PoleSequence {
        let m = MetricSpec::flat();
        let v = alpha / (alpha.y * alpha.y - alpha.x * alpha.x).sqrt();
        let opts = PoleOptions {
            cone: Some(ConeEstimate::flat()),
            ..PoleOptions::default()
        };
        let t = Schedule::default().times(n)[n - 1];
        let ray = integrate_geodesic(&m, p, v, t, t).unwrap();
        build_pole_sequence_with(&m, p, alpha, n, &ray, &opts).unwrap()
    }

    #[test]
    fn flat_vertical_limit() {
        let m = MetricSpec::flat();
        let seq = flat_sequence(Vec2::new(0.0, 1.0), Vec2::new(0.5, 0.5), 14);
        let w = Window::unit();
        let b = busemann_field(&m, &seq, w, Resolution::square(33), 1e-4).unwrap();
        assert!(b.converged);
        assert!(!b.anchored);
        for k in 0..b.values.len() {
            assert!((b.gradient[k] - Vec2::new(0.0, 1.0)).norm() < 1e-4);
        }
        let c = b.values[0] - (-w.y0);
        for (i, j, z) in b.nodes() {
            assert!((b.values[b.index(i, j)] - (-z.y + c)).abs() < 1e-4);
        }
        let h = hessian_probe(&b, &Vec2::new(0.5, 0.5)).unwrap();
        assert!(h.norm() < 1e-3);
        let last = b.history.last().unwrap();
        assert!(last.value_gap < 1e-4 && last.gradient_gap < 1e-4);
    }

    #[test]
    fn truncated_sequence_is_flagged() {
        let m = MetricSpec::flat();
        let seq = flat_sequence(Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0), 3);
        let w = Window::new(0.0, 2.0, 0.0, 2.0).unwrap();
        let e = busemann_field(&m, &seq, w, Resolution::square(17), 1e-4);
        assert!(matches!(e, Err(BusemannError::NoConvergence { .. })));
        let opts = BusemannOptions {
            allow_unconverged: true,
            ..BusemannOptions::default()
        };
        let b = busemann_field_with(&m, &seq, w, Resolution::square(17), 1e-4, &opts).unwrap();
        let r = check_periodicity(&b).unwrap();
        assert!(!r.converged);
        assert!(r.defect > 1e-3);
    }

    #[test]
    fn small_window_cannot_check_periodicity() {
        let m = MetricSpec::flat();
        let seq = flat_sequence(Vec2::new(0.0, 1.0), Vec2::new(0.5, 0.5), 3);
        let opts = BusemannOptions {
            allow_unconverged: true,
            ..BusemannOptions::default()
        };
        let b = busemann_field_with(&m, &seq, Window::unit(), Resolution::square(9), 1e-4, &opts).unwrap();
        assert!(matches!(check_periodicity(&b), Err(BusemannError::WindowTooSmall)));
    }
}
