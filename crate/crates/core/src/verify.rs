//! Executable acceptance checks.
//!
//! [`Acceptance`] runs the twelve fixed criteria on the built-in families;
//! [`metric_suite`] runs the metric-generic subset on an arbitrary metric, behind
//! a signature gate.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::busemann::{
    busemann_toward, calibration_check, check_periodicity, integral_curves_with, rational_direction_field,
    validate_condition_star, build_pole_sequence_with, AngularDomain, BusemannError, BusemannField,
    ConstructionOptions, FoliationChart, LeafOptions, PoleOptions, Schedule, Side, Target,
};
use crate::causal::{estimate_cone, ConeEstimate};
use crate::geodesic::{integrate_geodesic, jacobi_conjugate_scan, pole_check};
use crate::lines::LineOptions;
use crate::maxdist::{
    lorentz_distance, lorentz_distance_with, CausalStatus, DistanceOptions, Resolution, ScalarField,
    Window,
};
use crate::metric::{
    inner_with, signature_check, BoostFrame, ConstantCurvatureMetric, Metric, MetricSpec, SignatureReport,
};
use crate::Vec2;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub measured: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub seconds: f64,
}

impl CriterionResult {
    /// One-line summary, `PASS`/`FAIL` first.
    pub fn line(&self) -> String {
        let m: Vec<String> = self.measured.iter().map(|(k, v)| format!("{k}={v:.3e}")).collect();
        let mut s = format!(
            "{} criterion {:>2} {} ({:.1} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            m.join(", ")
        );
        for n in &self.notes {
            s.push_str(" | ");
            s.push_str(n);
        }
        s
    }
}

#[derive(Default)]
struct Check {
    measured: BTreeMap<String, f64>,
    notes: Vec<String>,
    failed: bool,
}

impl Check {
    fn record(&mut self, key: &str, value: f64) {
        self.measured.insert(key.to_string(), value);
    }

    fn require(&mut self, key: &str, value: f64, ok: bool) {
        self.record(key, value);
        if !ok {
            self.failed = true;
            self.notes.push(format!("{key} out of bounds"));
        }
    }

    fn below(&mut self, key: &str, value: f64, bound: f64) {
        self.require(key, value, value < bound);
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn run(id: &str, title: &str, f: impl FnOnce(&mut Check) -> Result<(), String>) -> CriterionResult {
    let t0 = Instant::now();
    let mut c = Check::default();
    if let Err(e) = f(&mut c) {
        c.failed = true;
        c.notes.push(format!("error: {e}"));
    }
    CriterionResult {
        id: id.to_string(),
        title: title.to_string(),
        passed: !c.failed,
        measured: c.measured,
        notes: c.notes,
        seconds: t0.elapsed().as_secs_f64(),
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

/// Unit future velocity at `p` with rapidity `theta` in the boost frame.
fn launch<M: Metric + ?Sized>(metric: &M, p: Vec2, theta: f64) -> Vec2 {
    BoostFrame::at(metric, &p).velocity(theta)
}

/// Future displacement of Euclidean length `len` tilted by `phi` from (0,1).
fn tilted(phi: f64, len: f64) -> Vec2 {
    Vec2::new(phi.sin(), phi.cos()) * len
}

/// A perturbed chord through the field's window that the calibration check
/// accepts, or `None` after repeated rejections.
fn test_curve<M: Metric + ?Sized>(
    rng: &mut ChaCha8Rng,
    metric: &M,
    field: &ScalarField,
) -> Option<Vec<Vec2>> {
    let w = field.window;
    for _ in 0..200 {
        let start = Vec2::new(
            w.x0 + w.width() * rng.gen_range(0.15..0.85),
            w.y0 + w.height() * rng.gen_range(0.05..0.4),
        );
        let v = launch(metric, start, rng.gen_range(-0.6..0.6)).normalize();
        let len = w.width().min(w.height()) * rng.gen_range(0.2..0.5);
        let amp = len * rng.gen_range(-0.08..0.08);
        let n = Vec2::new(-v.y, v.x);
        let curve: Vec<Vec2> = (0..=200)
            .map(|k| {
                let s = k as f64 / 200.0;
                start + v * (len * s) + n * (amp * (PI * s).sin())
            })
            .collect();
        if calibration_check(metric, field, &curve).is_ok() {
            return Some(curve);
        }
    }
    None
}

/// Largest residual of the calibration identity along leaves, and the
/// smallest slack over `n` random test curves.
fn calibration_stats<M: Metric + ?Sized>(
    metric: &M,
    field: &ScalarField,
    chart: &FoliationChart,
    n: usize,
    seed: u64,
) -> Result<(f64, f64, usize), String> {
    let mut leaf_res: f64 = 0.0;
    for leaf in &chart.leaves {
        if leaf.points.len() < 2 {
            continue;
        }
        leaf_res = leaf_res.max(calibration_check(metric, field, &leaf.points).map_err(err)?.residual);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    let mut used = 0;
    for _ in 0..n {
        let Some(c) = test_curve(&mut rng, metric, field) else {
            continue;
        };
        min_slack = min_slack.min(calibration_check(metric, field, &c).map_err(err)?.slack);
        used += 1;
    }
    Ok((leaf_res, min_slack, used))
}

fn seeds_on_row(w: &Window, n: usize, frac: f64) -> Vec<Vec2> {
    (0..n)
        .map(|i| Vec2::new(w.x0 + w.width() * (i as f64 + 0.5) / n as f64, w.y0 + w.height() * frac))
        .collect()
}

/// Ratio of successive endpoint differences under step halving, over a unit
/// horizon. The starting step is the smallest of a fixed ladder whose finest
/// difference stays above the round-off floor; rungs the drift guard rejects
/// are skipped.
fn richardson_ratio<M: Metric + ?Sized>(metric: &M, p: Vec2, v: Vec2) -> Result<f64, String> {
    let end = |s: f64| integrate_geodesic(metric, p, v, 1.0, s).map(|g| g.end()).ok();
    let mut best = None;
    for h in [0.04, 0.02, 0.01, 0.005, 0.0025] {
        let (Some(a), Some(b), Some(c)) = (end(h), end(h / 2.0), end(h / 4.0)) else {
            continue;
        };
        if (b - c).norm() < 1e-11 {
            break;
        }
        best = Some((a - b).norm() / (b - c).norm());
    }
    best.ok_or_else(|| "endpoint differences are below the round-off floor".to_string())
}

/// Random pairs `x ≪ y` with chord inside a cone of half-angle `max_tilt`.
fn causal_pair(rng: &mut ChaCha8Rng, max_tilt: f64) -> (Vec2, Vec2) {
    let x = Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
    (x, x + tilted(rng.gen_range(-max_tilt..max_tilt), rng.gen_range(0.5..2.0)))
}

/// Reverse-triangle violation and translation defects on random samples.
fn order_properties<M: Metric + ?Sized>(
    metric: &M,
    triples: usize,
    shifts: usize,
    seed: u64,
    opts: &DistanceOptions,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = |a: Vec2, b: Vec2| lorentz_distance_with(metric, a, b, opts).value;
    let mut violation: f64 = 0.0;
    for _ in 0..triples {
        let (x, y) = causal_pair(&mut rng, 0.35);
        let z = y + tilted(rng.gen_range(-0.35..0.35), rng.gen_range(0.5..2.0));
        violation = violation.max(d(x, y) + d(y, z) - d(x, z));
    }
    let mut shift: f64 = 0.0;
    for _ in 0..shifts {
        let (x, y) = causal_pair(&mut rng, 0.35);
        let k = Vec2::new(rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64);
        shift = shift.max((d(x + k, y + k) - d(x, y)).abs());
    }
    (violation, shift)
}

fn distance_opts() -> DistanceOptions {
    DistanceOptions {
        sweep: 128,
        step: 2e-3,
        ..DistanceOptions::default()
    }
}

fn flat_cone() -> ConeEstimate {
    ConeEstimate::flat()
}

/// Fields shared between criteria.
#[derive(Default)]
pub struct Acceptance {
    sheared: [OnceLock<Result<BusemannField, String>>; 2],
    seed: u64,
}

pub const ACCEPTANCE_IDS: [u8; 12] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];

impl Acceptance {
    pub fn new(seed: u64) -> Self {
        Acceptance {
            seed,
            ..Acceptance::default()
        }
    }

    fn sheared_metric() -> MetricSpec {
        MetricSpec::sheared(0.2)
    }

    /// Sheared `α = (0,1)` field on the unit window; index 0 is 65², 1 is 129².
    fn sheared_field(&self, which: usize) -> Result<&BusemannField, String> {
        self.sheared[which]
            .get_or_init(|| {
                let m = Self::sheared_metric();
                let res = Resolution::square([65, 129][which]);
                busemann_toward(
                    &m,
                    Vec2::new(0.5, 0.5),
                    Target::Direction(Vec2::new(0.0, 1.0)),
                    Window::unit(),
                    res,
                    1e-4,
                    &ConstructionOptions::default(),
                )
                .map_err(err)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn run(&self, id: u8) -> CriterionResult {
        match id {
            1 => self.flat_distance(),
            2 => self.flat_busemann(),
            3 => self.conformal_cone(),
            4 => self.geodesic_integrity(),
            5 => self.jacobi_oracle(),
            6 => self.sheared_eikonal(),
            7 => self.periodicity(),
            8 => self.foliation(),
            9 => self.calibration(),
            10 => self.order_properties(),
            11 => self.condition_star(),
            12 => self.rational_routes(),
            _ => run(&id.to_string(), "unknown criterion", |_| Err(format!("no criterion {id}"))),
        }
    }

    pub fn run_all(&self) -> Vec<CriterionResult> {
        ACCEPTANCE_IDS.iter().map(|&i| self.run(i)).collect()
    }

    fn flat_distance(&self) -> CriterionResult {
        run("1", "flat closed-form distance", |c| {
            let m = MetricSpec::flat();
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let (mut timelike, mut spacelike) = (0, 0);
            let mut worst: f64 = 0.0;
            let mut bad_status = 0;
            while timelike < 200 || spacelike < 50 {
                let x = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                let y = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                let d = y - x;
                if d.y > d.x.abs() * 1.001 && timelike < 200 {
                    timelike += 1;
                    let r = lorentz_distance(&m, x, y);
                    worst = worst.max((r.value - (d.y * d.y - d.x * d.x).sqrt()).abs());
                    bad_status += usize::from(r.status != CausalStatus::Timelike);
                } else if d.x.abs() > d.y.abs() * 1.001 && spacelike < 50 {
                    spacelike += 1;
                    let r = lorentz_distance(&m, x, y);
                    bad_status += usize::from(r.status != CausalStatus::NotCausallyRelated || r.value != 0.0);
                }
            }
            c.below("max_error", worst, 1e-6);
            c.require("wrong_status", bad_status as f64, bad_status == 0);
            Ok(())
        })
    }

    fn flat_busemann(&self) -> CriterionResult {
        run("2", "flat Busemann limit", |c| {
            let m = MetricSpec::flat();
            let opts = ConstructionOptions::default().with_cone(flat_cone());
            let p = Vec2::new(0.5, 0.5);
            let (w, r) = (Window::unit(), Resolution::square(65));
            let b = busemann_toward(&m, p, Target::Direction(Vec2::new(0.0, 1.0)), w, r, 1e-4, &opts).map_err(err)?;
            let grad = max_of((0..b.values.len()).filter(|&k| b.valid[k]).map(|k| (b.gradient[k] - Vec2::new(0.0, 1.0)).norm()));
            c.below("vertical_gradient_error", grad, 1e-4);
            c.below("vertical_residual", b.eikonal.max_residual, 1e-5);
            let phi: f64 = 0.3;
            let a = Vec2::new(phi.sin(), phi.cos());
            let b = busemann_toward(&m, p, Target::Direction(a), w, r, 1e-4, &opts).map_err(err)?;
            let exact = |z: &Vec2| (z.x * phi.sin() - z.y * phi.cos()) / (2.0 * phi).cos().sqrt();
            let k0 = b.index(32, 32);
            let shift = b.values[k0] - exact(&b.node(32, 32));
            let dev = max_of(b.nodes().filter(|(i, j, _)| b.valid[b.index(*i, *j)]).map(|(i, j, z)| {
                (b.values[b.index(i, j)] - exact(&z) - shift).abs()
            }));
            c.below("tilted_value_error", dev, 1e-4);
            Ok(())
        })
    }

    fn conformal_cone(&self) -> CriterionResult {
        run("3", "conformal cone invariance", |c| {
            let cone = estimate_cone(&MetricSpec::conformal(0.1), 100.0).map_err(err)?;
            let f = flat_cone();
            c.below("m_minus_error", (cone.m_minus - f.m_minus).norm(), 1e-6);
            c.below("m_plus_error", (cone.m_plus - f.m_plus).norm(), 1e-6);
            Ok(())
        })
    }

    fn geodesic_integrity(&self) -> CriterionResult {
        run("4", "geodesic integrity", |c| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            for (name, m) in [
                ("flat", MetricSpec::flat()),
                ("conformal", MetricSpec::conformal(0.1)),
                ("sheared", Self::sheared_metric()),
            ] {
                let mut drift: f64 = 0.0;
                let mut ratios = Vec::new();
                for i in 0..20 {
                    let p = Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
                    let v = launch(&m, p, rng.gen_range(-1.5..1.5));
                    drift = drift.max(integrate_geodesic(&m, p, v, 50.0, 1e-3).map_err(err)?.norm_drift);
                    if i < 5 && !m.is_constant() {
                        ratios.push(richardson_ratio(&m, p, v)?);
                    }
                }
                c.require(&format!("{name}_norm_drift"), drift, drift <= 1e-8);
                if !ratios.is_empty() {
                    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = max_of(ratios.iter().cloned());
                    c.require(&format!("{name}_richardson_min"), lo, (lo - 16.0).abs() <= 3.0);
                    c.require(&format!("{name}_richardson_max"), hi, (hi - 16.0).abs() <= 3.0);
                }
            }
            c.note("flat endpoints are exact; no Richardson ratio");
            Ok(())
        })
    }

    fn jacobi_oracle(&self) -> CriterionResult {
        run("5", "Jacobi oracle", |c| {
            for k0 in [1.0f64, 4.0, 9.0] {
                let m = ConstantCurvatureMetric::new(k0);
                let exact = PI / k0.sqrt();
                let r = jacobi_conjugate_scan(&m, Vec2::zeros(), Vec2::new(0.0, 1.0), 1.5 * exact).map_err(err)?;
                let e = r.first_conjugate.map_or(f64::INFINITY, |t| (t - exact).abs());
                c.below(&format!("conjugate_error_k{k0}"), e, 1e-6);
            }
            let r = pole_check(&MetricSpec::flat(), Vec2::new(0.5, 0.5), 16, 50.0).map_err(err)?;
            c.require("flat_pole", f64::from(u8::from(r.is_pole_up_to_horizon)), r.is_pole_up_to_horizon);
            Ok(())
        })
    }

    fn sheared_eikonal(&self) -> CriterionResult {
        run("6", "nontrivial eikonal construction", |c| {
            let b = self.sheared_field(0)?;
            let last = b.history.last().ok_or("empty history")?;
            c.below("value_gap", last.value_gap, 1e-3);
            c.below("gradient_gap", last.gradient_gap, 1e-3);
            c.below("residual_65", b.eikonal.max_residual, 1e-3);
            let fine = self.sheared_field(1)?;
            c.record("residual_129", fine.eikonal.max_residual);
            let ratio = b.eikonal.max_residual / fine.eikonal.max_residual;
            c.require("residual_ratio", ratio, (3.0..=5.0).contains(&ratio));
            Ok(())
        })
    }

    fn periodicity(&self) -> CriterionResult {
        run("7", "lattice periodicity of the gradient", |c| {
            let m = Self::sheared_metric();
            let w = Window::new(0.0, 2.0, 0.0, 2.0).map_err(err)?;
            let mut defects = Vec::new();
            for n in [65, 129] {
                let b = busemann_toward(
                    &m,
                    Vec2::new(1.0, 1.0),
                    Target::Direction(Vec2::new(0.0, 1.0)),
                    w,
                    Resolution::square(n),
                    1e-4,
                    &ConstructionOptions::default(),
                )
                .map_err(err)?;
                defects.push(check_periodicity(&b).map_err(err)?.defect);
            }
            c.below("defect_65", defects[0], 1e-3);
            c.record("defect_129", defects[1]);
            let ratio = defects[0] / defects[1];
            c.require("defect_ratio", ratio, (1.6..=2.4).contains(&ratio));
            Ok(())
        })
    }

    fn leaves(&self) -> Result<FoliationChart, String> {
        let m = Self::sheared_metric();
        let b = self.sheared_field(0)?;
        integral_curves_with(&m, b, &seeds_on_row(&b.window, 16, 0.05), 0.9, &LeafOptions::default()).map_err(err)
    }

    fn foliation(&self) -> CriterionResult {
        run("8", "foliation by integral curves", |c| {
            let chart = self.leaves()?;
            c.below("geodesic_deviation", chart.max_geodesic_deviation, 1e-4);
            c.require("min_separation", chart.min_separation, chart.min_separation > 0.0);
            c.below("direction_error", chart.max_direction_error, 2e-3);
            Ok(())
        })
    }

    fn calibration(&self) -> CriterionResult {
        run("9", "calibration", |c| {
            let m = Self::sheared_metric();
            let b = self.sheared_field(0)?;
            let chart = self.leaves()?;
            let (res, slack, used) = calibration_stats(&m, b, &chart, 100, self.seed)?;
            c.below("sheared_leaf_residual", res, 2.0 * b.tol);
            c.require("sheared_min_slack", slack, slack >= -1e-4);
            c.require("sheared_curves", used as f64, used == 100);

            let f = MetricSpec::flat();
            let opts = ConstructionOptions::default().with_cone(flat_cone());
            let w = Window::unit();
            let fb = busemann_toward(&f, w.center(), Target::Direction(Vec2::new(0.0, 1.0)), w, Resolution::square(65), 1e-4, &opts)
                .map_err(err)?;
            let lopts = LeafOptions {
                cone: Some(flat_cone()),
                ..LeafOptions::default()
            };
            let chart = integral_curves_with(&f, &fb, &seeds_on_row(&w, 16, 0.05), 0.9, &lopts).map_err(err)?;
            let (res, slack, used) = calibration_stats(&f, &fb, &chart, 100, self.seed + 1)?;
            c.below("flat_leaf_residual", res, 2.0 * fb.tol);
            c.require("flat_min_slack", slack, slack >= -1e-4);
            c.require("flat_curves", used as f64, used == 100);
            Ok(())
        })
    }

    fn order_properties(&self) -> CriterionResult {
        run("10", "order and metric properties", |c| {
            let opts = distance_opts();
            let (fv, _) = order_properties(&MetricSpec::flat(), 500, 0, self.seed, &opts);
            let (cv, cs) = order_properties(&MetricSpec::conformal(0.1), 500, 100, self.seed + 1, &opts);
            let (_, ss) = order_properties(&Self::sheared_metric(), 0, 100, self.seed + 2, &opts);
            c.below("flat_triangle_violation", fv, 1e-6);
            c.below("conformal_triangle_violation", cv, 1e-6);
            c.below("conformal_shift_defect", cs, 1e-8);
            c.below("sheared_shift_defect", ss, 1e-8);
            Ok(())
        })
    }

    fn condition_star(&self) -> CriterionResult {
        run("11", "pole-sequence condition machinery", |c| {
            let m = MetricSpec::flat();
            let alpha = Vec2::new(0.0, 1.0);
            let ray = integrate_geodesic(&m, Vec2::zeros(), alpha, 60.0, 60.0).map_err(err)?;
            let opts = PoleOptions {
                schedule: Schedule::Arithmetic { spacing: 5.0 },
                cone: Some(flat_cone()),
                ..PoleOptions::default()
            };
            let s = build_pole_sequence_with(&m, Vec2::zeros(), alpha, 10, &ray, &opts).map_err(err)?;
            let lattice = s
                .deck_shifts
                .iter()
                .enumerate()
                .filter(|(i, k)| **k != [0, -5 * (*i as i64 + 1)])
                .count();
            c.require("off_lattice_poles", lattice as f64, lattice == 0);
            c.below("separation_error", max_of(s.separations.iter().map(|d| (d - 5.0).abs())), 1e-12);
            c.require("chord_deviation", s.q, s.q <= s.rounding_radius + 1e-12);
            let domain = AngularDomain::new(&m, Vec2::zeros(), &alpha, Side::Past, &flat_cone(), &LineOptions::default())
                .map_err(err)?;
            let shuffled = validate_condition_star(&m, &domain, &[[0, -5], [0, -15], [0, -10]]);
            let raised = matches!(shuffled, Err(BusemannError::ConditionStarViolation { .. }));
            c.require("shuffled_rejected", f64::from(u8::from(raised)), raised);
            Ok(())
        })
    }

    fn rational_routes(&self) -> CriterionResult {
        run("12", "rational two-route agreement", |c| {
            let w = Window::unit();
            for (name, m) in [("flat", MetricSpec::flat()), ("sheared", Self::sheared_metric())] {
                let r = rational_direction_field(&m, w.center(), [0, 1], w, Resolution::square(33), 1e-4).map_err(err)?;
                c.below(&format!("{name}_route_gap"), r.route_gap, 5e-3);
            }
            Ok(())
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteOptions {
    pub seed: u64,
    pub tol: f64,
    pub window: Window,
    pub resolution: Resolution,
    pub alpha: Vec2,
    pub construction: ConstructionOptions,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 7,
            tol: 1e-4,
            window: Window::unit(),
            resolution: Resolution::square(33),
            alpha: Vec2::new(0.0, 1.0),
            construction: ConstructionOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub metric: String,
    pub gate: SignatureReport,
    pub criteria: Vec<CriterionResult>,
    pub passed: bool,
}

/// Signature gate, then the metric-generic checks on `metric`.
///
/// Closed-form distances are used for constant metrics only; the Busemann
/// checks use `opts.alpha` on `opts.window` and a doubled window for
/// periodicity.
pub fn metric_suite(metric: &MetricSpec, opts: &SuiteOptions) -> Result<SuiteReport, String> {
    let gate = signature_check(metric, 32).map_err(err)?;
    let name = metric.family().name().to_string();
    if !gate.pass {
        return Ok(SuiteReport {
            metric: name,
            gate,
            criteria: Vec::new(),
            passed: false,
        });
    }
    let mut out = Vec::new();
    let cone = std::cell::OnceCell::new();
    let get_cone = || -> Result<ConeEstimate, String> {
        cone.get_or_init(|| estimate_cone(metric, 100.0).map_err(err)).clone()
    };

    out.push(run("S1", "geodesic integrity", |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut drift: f64 = 0.0;
        let mut ratios = Vec::new();
        for i in 0..20 {
            let p = Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let v = launch(metric, p, rng.gen_range(-1.5..1.5));
            drift = drift.max(integrate_geodesic(metric, p, v, 50.0, 1e-3).map_err(err)?.norm_drift);
            if i < 5 && !metric.is_constant() {
                ratios.push(richardson_ratio(metric, p, v)?);
            }
        }
        c.require("norm_drift", drift, drift <= 1e-8);
        for (i, r) in ratios.iter().enumerate() {
            c.require(&format!("richardson_{i}"), *r, (r - 16.0).abs() <= 3.0);
        }
        Ok(())
    }));

    out.push(run("S2", "stable time cone", |c| {
        let a = get_cone()?;
        let b = estimate_cone(metric, 200.0).map_err(err)?;
        c.below("m_minus_change", (a.m_minus - b.m_minus).norm(), 1e-3);
        c.below("m_plus_change", (a.m_plus - b.m_plus).norm(), 1e-3);
        Ok(())
    }));

    out.push(run("S3", "distance properties", |c| {
        let d_opts = distance_opts();
        if metric.is_constant() {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let g = metric.matrix(&Vec2::zeros());
            let mut worst: f64 = 0.0;
            for _ in 0..50 {
                let (x, y) = causal_pair(&mut rng, 0.35);
                let q = inner_with(&g, &(y - x), &(y - x));
                worst = worst.max((lorentz_distance(metric, x, y).value - (-q).max(0.0).sqrt()).abs());
            }
            c.below("closed_form_error", worst, 1e-6);
        }
        let (v, s) = order_properties(metric, 100, 50, opts.seed + 1, &d_opts);
        c.below("triangle_violation", v, 1e-6);
        c.below("shift_defect", s, 1e-8);
        Ok(())
    }));

    let cons = get_cone().map(|k| opts.construction.with_cone(k));
    let base = opts.window.center();
    let field = cons.clone().and_then(|co| {
        busemann_toward(metric, base, Target::Direction(opts.alpha), opts.window, opts.resolution, opts.tol, &co)
            .map_err(err)
    });

    out.push(run("S4", "Busemann limit", |c| {
        let b = field.as_ref().map_err(Clone::clone)?;
        let last = b.history.last().ok_or("empty history")?;
        c.below("value_gap", last.value_gap, opts.tol);
        c.below("gradient_gap", last.gradient_gap, opts.tol);
        c.below("max_residual", b.eikonal.max_residual, 1e-3);
        c.require("future_timelike", f64::from(u8::from(b.eikonal.future_timelike)), b.eikonal.future_timelike);
        Ok(())
    }));

    out.push(run("S5", "lattice periodicity", |c| {
        let co = cons.clone()?;
        let w = &opts.window;
        let doubled = Window::new(w.x0, w.x0 + 2.0 * w.width().max(1.0), w.y0, w.y0 + 2.0 * w.height().max(1.0))
            .map_err(err)?;
        let n = Resolution::new(2 * opts.resolution.nx - 1, 2 * opts.resolution.ny - 1).map_err(err)?;
        let b = busemann_toward(metric, doubled.center(), Target::Direction(opts.alpha), doubled, n, opts.tol, &co)
            .map_err(err)?;
        c.below("defect", check_periodicity(&b).map_err(err)?.defect, 1e-3);
        Ok(())
    }));

    let chart = field.as_ref().map_err(Clone::clone).and_then(|b| {
        let lopts = LeafOptions {
            cone: get_cone().ok(),
            ..LeafOptions::default()
        };
        integral_curves_with(metric, b, &seeds_on_row(&b.window, 16, 0.05), 0.9 * b.window.height(), &lopts)
            .map_err(err)
    });

    out.push(run("S6", "foliation", |c| {
        let chart = chart.as_ref().map_err(Clone::clone)?;
        c.below("geodesic_deviation", chart.max_geodesic_deviation, 1e-4);
        c.require("min_separation", chart.min_separation, chart.min_separation > 0.0);
        c.below("direction_error", chart.max_direction_error, 2e-3);
        Ok(())
    }));

    out.push(run("S7", "calibration", |c| {
        let b = field.as_ref().map_err(Clone::clone)?;
        let chart = chart.as_ref().map_err(Clone::clone)?;
        let (res, slack, used) = calibration_stats(metric, b, chart, 100, opts.seed + 2)?;
        c.below("leaf_residual", res, 2.0 * b.tol);
        c.require("min_slack", slack, slack >= -1e-4);
        c.require("curves", used as f64, used == 100);
        Ok(())
    }));

    let passed = out.iter().all(|r| r.passed);
    Ok(SuiteReport {
        metric: name,
        gate,
        criteria: out,
        passed,
    })
}
