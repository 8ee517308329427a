use std::path::{Path, PathBuf};

use foliate_core::busemann::{
    busemann_field_with, check_periodicity, integral_curves_of, poles_toward, BusemannError, ConstructionOptions,
    LeafOptions, Target,
};
use foliate_core::causal::estimate_cone;
use foliate_core::geodesic::pole_check_with_step;
use foliate_core::maxdist::{lorentz_distance_with, CausalStatus, DistanceOptions, ScalarField, Window};
use foliate_core::metric::{signature_check, MetricSpec};
use foliate_core::verify::{metric_suite, Acceptance, SuiteOptions};
use foliate_core::Vec2;

use crate::config::Resolved;
use crate::error::CliError;
use crate::files::*;

const GATE_RESOLUTION: usize = 32;

fn gate(metric: &MetricSpec) -> Result<GateFile, CliError> {
    let r = signature_check(metric, GATE_RESOLUTION)?;
    Ok(GateFile {
        pass: r.pass,
        resolution: r.resolution,
        min_abs_det: r.min_abs_det,
        min_neg_g22: r.min_neg_g22,
        min_g11: r.min_g11,
    })
}

fn require_gate(metric: &MetricSpec) -> Result<(), CliError> {
    let g = gate(metric)?;
    if g.pass {
        Ok(())
    } else {
        Err(CliError::Invalid(format!(
            "signature_check failed: det g < 0 and g22 < 0 must hold on the {0}x{0} grid (min -g22 = {1}, min |det| = {2})",
            g.resolution, g.min_neg_g22, g.min_abs_det
        )))
    }
}

fn out_dir(cfg: &Resolved) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&cfg.out)?;
    Ok(cfg.out.clone())
}

fn emit<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let p = dir.join(name);
    write_json(&p, value)?;
    println!("wrote {}", p.display());
    Ok(())
}

fn emit_rows<T: serde::Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<(), CliError> {
    let p = dir.join(name);
    write_rows(&p, rows)?;
    println!("wrote {}", p.display());
    Ok(())
}

pub fn cone(cfg: &Resolved) -> Result<(), CliError> {
    require_gate(&cfg.metric)?;
    let length = cfg.length()?;
    let c = estimate_cone(&cfg.metric, length)?;
    emit(
        &out_dir(cfg)?,
        "cone.json",
        &ConeFile {
            schema: SCHEMA,
            metric: cfg.metric_source.clone(),
            m_minus: pair(&c.m_minus),
            m_plus: pair(&c.m_plus),
            d: c.deviation_bound_d,
            length,
        },
    )
}

pub fn distance(cfg: &Resolved, x: Option<[f64; 2]>, y: Option<[f64; 2]>) -> Result<(), CliError> {
    require_gate(&cfg.metric)?;
    let x = cfg.point(x, cfg.file.x).ok_or_else(|| CliError::Invalid("--x is required".into()))?;
    let y = cfg.point(y, cfg.file.y).ok_or_else(|| CliError::Invalid("--y is required".into()))?;
    let opts = DistanceOptions {
        step: cfg.step()?,
        cross_check: cfg.cross_check(),
        ..DistanceOptions::default()
    };
    let r = lorentz_distance_with(&cfg.metric, x, y, &opts);
    let maximizer = r
        .maximizer
        .as_ref()
        .map(|g| {
            let pts = g.points();
            let stride = pts.len().div_ceil(200).max(1);
            let mut v: Vec<[f64; 2]> = pts.iter().step_by(stride).map(pair).collect();
            if (pts.len() - 1) % stride != 0 {
                v.push(pair(&pts[pts.len() - 1]));
            }
            v
        })
        .unwrap_or_default();
    let status = match r.status {
        CausalStatus::Timelike => "timelike",
        CausalStatus::NullBoundary => "null-boundary",
        CausalStatus::NotCausallyRelated => "not-causally-related",
    };
    emit(
        &out_dir(cfg)?,
        "distance.json",
        &DistanceFile {
            schema: SCHEMA,
            metric: cfg.metric_source.clone(),
            x: pair(&x),
            y: pair(&y),
            value: r.value,
            status: status.into(),
            connections: r.connections,
            ambiguous_cut: r.ambiguous_cut,
            maximizer,
            variational_value: r.variational_value,
            method_agreement: r.method_agreement,
        },
    )
}

pub fn pole(cfg: &Resolved, p: Option<[f64; 2]>, directions: usize) -> Result<(), CliError> {
    require_gate(&cfg.metric)?;
    let p = cfg.point(p, cfg.file.p).unwrap_or(Vec2::new(0.5, 0.5));
    let horizon = cfg.horizon().unwrap_or(50.0);
    let r = pole_check_with_step(&cfg.metric, p, directions, horizon, cfg.step()?)?;
    emit(
        &out_dir(cfg)?,
        "pole.json",
        &PoleFile {
            schema: SCHEMA,
            metric: cfg.metric_source.clone(),
            p: pair(&p),
            horizon,
            n_directions: r.n_directions,
            is_pole: r.is_pole_up_to_horizon,
            first_conjugate: r.first_conjugate,
            worst_direction: r.worst_direction,
            jacobi_min_abs: r.jacobi_min_abs,
        },
    )
}

fn construction(cfg: &Resolved, poles: Option<usize>) -> ConstructionOptions {
    let mut o = ConstructionOptions::default();
    if let Some(n) = poles.or(cfg.file.poles) {
        o.n_poles = n;
    }
    o
}

struct Built {
    field: ScalarField,
    alpha: Vec2,
}

fn target_pair(t: &Target) -> (String, [f64; 2]) {
    match t {
        Target::Direction(a) => ("alpha".into(), pair(a)),
        Target::Deck(k) => ("k".into(), [k[0] as f64, k[1] as f64]),
    }
}

fn build_field(cfg: &Resolved, p: Option<[f64; 2]>, poles: Option<usize>, dir: &Path) -> Result<Built, CliError> {
    let window = cfg.window()?;
    let res = cfg.resolution()?;
    let tol = cfg.tol()?;
    let target = cfg.target()?.unwrap_or(Target::Direction(Vec2::new(0.0, 1.0)));
    let base = cfg.point(p, cfg.file.p).unwrap_or(window.center());
    let opts = construction(cfg, poles);
    let opts = opts.with_cone(opts.resolve_cone(&cfg.metric)?);
    let seq = poles_toward(&cfg.metric, base, target, &opts)?;
    let b = busemann_field_with(&cfg.metric, &seq, window, res, tol, &opts.busemann)?;
    emit_rows(dir, "field.csv", &field_rows(&b.field, &cfg.metric))?;
    let (kind, value) = target_pair(&target);
    emit(
        dir,
        "history.json",
        &HistoryFile {
            schema: SCHEMA,
            metric: cfg.metric_source.clone(),
            target: kind,
            target_value: value,
            direction: pair(&b.direction),
            base: pair(&base),
            window: [window.x0, window.x1, window.y0, window.y1],
            res: [res.nx, res.ny],
            tol,
            converged: b.converged,
            iterations_used: b.iterations_used,
            anchored: b.anchored,
            poles: seq.poles.iter().map(pair).collect(),
            history: b
                .history
                .iter()
                .map(|h| HistoryEntry {
                    iteration: h.iteration,
                    time: h.time,
                    value_gap: h.value_gap.is_finite().then_some(h.value_gap),
                    gradient_gap: h.gradient_gap.is_finite().then_some(h.gradient_gap),
                    center_value: h.center_value,
                    anchored: h.anchored,
                })
                .collect(),
            eikonal: EikonalSummary {
                max_residual: b.eikonal.max_residual,
                mean_residual: b.eikonal.mean_residual,
                max_residual_all: b.eikonal.max_residual_all,
                future_timelike: b.eikonal.future_timelike,
            },
        },
    )?;
    let periodicity = match check_periodicity(&b) {
        Ok(r) => PeriodicityFile {
            schema: SCHEMA,
            available: true,
            reason: None,
            defect: Some(r.defect),
            defect_x: r.defect_x,
            defect_y: r.defect_y,
            pairs: r.pairs,
            node_aligned: r.node_aligned,
            converged: r.converged,
        },
        Err(BusemannError::WindowTooSmall) => PeriodicityFile {
            schema: SCHEMA,
            available: false,
            reason: Some("window is at most one period wide in both directions".into()),
            defect: None,
            defect_x: None,
            defect_y: None,
            pairs: 0,
            node_aligned: false,
            converged: b.converged,
        },
        Err(e) => return Err(e.into()),
    };
    emit(dir, "periodicity.json", &periodicity)?;
    Ok(Built {
        alpha: b.direction,
        field: b.field,
    })
}

pub fn busemann(cfg: &Resolved, p: Option<[f64; 2]>, poles: Option<usize>) -> Result<(), CliError> {
    require_gate(&cfg.metric)?;
    let dir = out_dir(cfg)?;
    build_field(cfg, p, poles, &dir).map(|_| ())
}

pub struct FoliateArgs {
    pub field: Option<PathBuf>,
    pub leaves: Option<usize>,
    pub p: Option<[f64; 2]>,
    pub poles: Option<usize>,
}

pub fn foliate(cfg: &Resolved, args: &FoliateArgs) -> Result<(), CliError> {
    require_gate(&cfg.metric)?;
    let dir = out_dir(cfg)?;
    let (field, alpha) = match &args.field {
        Some(path) => {
            let f = read_field(path, &cfg.metric)?;
            let alpha = match cfg.target()? {
                Some(t) => t.alpha(),
                None => {
                    let h: HistoryFile = read_json(&path.with_file_name("history.json")).map_err(|e| {
                        CliError::Invalid(format!("give --alpha or --k, or keep history.json next to the field ({e})"))
                    })?;
                    Vec2::new(h.direction[0], h.direction[1])
                }
            };
            (f, alpha)
        }
        None => {
            let b = build_field(cfg, args.p, args.poles, &dir)?;
            (b.field, b.alpha)
        }
    };
    let n = args.leaves.or(cfg.file.leaves).unwrap_or(16);
    if n == 0 {
        return Err(CliError::Invalid("need at least one leaf".into()));
    }
    let w: Window = field.window;
    let seeds: Vec<Vec2> = (0..n)
        .map(|i| Vec2::new(w.x0 + w.width() * (i as f64 + 0.5) / n as f64, w.y0 + 0.05 * w.height()))
        .collect();
    let horizon = cfg.horizon().unwrap_or(0.9 * w.height());
    let lopts = LeafOptions {
        cone: Some(estimate_cone(&cfg.metric, 100.0)?),
        ..LeafOptions::default()
    };
    let chart = integral_curves_of(&cfg.metric, &field, alpha, &seeds, horizon, &lopts)?;
    let mut rows = Vec::new();
    for (id, leaf) in chart.leaves.iter().enumerate() {
        for (t, x) in leaf.times.iter().zip(&leaf.points) {
            rows.push(LeafRow {
                leaf_id: id,
                t: *t,
                x: x.x,
                y: x.y,
            });
        }
    }
    emit_rows(&dir, "leaves.csv", &rows)?;
    let a = alpha.normalize();
    emit(
        &dir,
        "direction.json",
        &DirectionFile {
            schema: SCHEMA,
            alpha: pair(&a),
            max_direction_error: chart.max_direction_error,
            leaves: chart
                .leaves
                .iter()
                .enumerate()
                .map(|(id, l)| LeafDirection {
                    leaf_id: id,
                    seed: pair(&l.seed),
                    direction: pair(&l.direction.alpha),
                    error: (l.direction.alpha - a).norm(),
                    chord_deviation: l.direction.d,
                    left_window: l.left_window,
                    geodesic_deviation: l.geodesic_deviation,
                })
                .collect(),
        },
    )?;
    let finite_sep = if chart.min_separation.is_finite() { chart.min_separation } else { 0.0 };
    emit(
        &dir,
        "disjointness.json",
        &DisjointnessFile {
            schema: SCHEMA,
            n_leaves: chart.leaves.len(),
            min_separation: finite_sep,
            disjoint: chart.leaves.len() < 2 || chart.min_separation > 0.0,
            max_geodesic_deviation: chart.max_geodesic_deviation,
        },
    )
}

/// Returns whether every check passed; the gate failing is an input error.
pub fn verify(cfg: &Resolved, acceptance: bool) -> Result<bool, CliError> {
    let dir = out_dir(cfg)?;
    let mut opts = SuiteOptions {
        seed: cfg.seed(),
        tol: cfg.tol()?,
        window: cfg.window()?,
        ..SuiteOptions::default()
    };
    if cfg.common.res.is_some() || cfg.file.res.is_some() {
        opts.resolution = cfg.resolution()?;
    }
    if let Some(t) = cfg.target()? {
        opts.alpha = t.alpha();
    }
    let report = metric_suite(&cfg.metric, &opts).map_err(CliError::Numerical)?;
    for r in &report.criteria {
        println!("{}", r.line());
    }
    let accept = acceptance.then(|| {
        let a = Acceptance::new(cfg.seed());
        let rs = a.run_all();
        for r in &rs {
            println!("{}", r.line());
        }
        rs
    });
    let passed = report.passed && accept.as_ref().is_none_or(|rs| rs.iter().all(|r| r.passed));
    let g = &report.gate;
    emit(
        &dir,
        "verify.json",
        &VerifyFile {
            schema: SCHEMA,
            metric: cfg.metric_source.clone(),
            gate: GateFile {
                pass: g.pass,
                resolution: g.resolution,
                min_abs_det: g.min_abs_det,
                min_neg_g22: g.min_neg_g22,
                min_g11: g.min_g11,
            },
            passed,
            criteria: report.criteria.iter().map(CriterionFile::from).collect(),
            acceptance: accept.map(|rs| rs.iter().map(CriterionFile::from).collect()),
        },
    )?;
    if !g.pass {
        return Err(CliError::Invalid(format!(
            "signature_check failed on the {0}x{0} grid; no checks were run",
            g.resolution
        )));
    }
    Ok(passed)
}
