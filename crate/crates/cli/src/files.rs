//! Output formats and their readers. Every JSON file carries `schema`.

use std::collections::BTreeMap;
use std::path::Path;

use foliate_core::maxdist::{raise, FieldKind, Resolution, ScalarField, Window};
use foliate_core::metric::{Metric, MetricSpec};
use foliate_core::Vec2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA: u32 = 1;

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn pair(v: &Vec2) -> [f64; 2] {
    [v.x, v.y]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeFile {
    pub schema: u32,
    pub metric: String,
    pub m_minus: [f64; 2],
    pub m_plus: [f64; 2],
    #[serde(rename = "D")]
    pub d: f64,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceFile {
    pub schema: u32,
    pub metric: String,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub value: f64,
    pub status: String,
    pub connections: usize,
    pub ambiguous_cut: bool,
    /// Sampled maximizer, empty when the points are not timelike related.
    pub maximizer: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variational_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method_agreement: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleFile {
    pub schema: u32,
    pub metric: String,
    pub p: [f64; 2],
    pub horizon: f64,
    pub n_directions: usize,
    pub is_pole: bool,
    pub first_conjugate: Option<f64>,
    pub worst_direction: Option<[f64; 2]>,
    pub jacobi_min_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub time: f64,
    pub value_gap: Option<f64>,
    pub gradient_gap: Option<f64>,
    pub center_value: f64,
    pub anchored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EikonalSummary {
    pub max_residual: f64,
    pub mean_residual: f64,
    pub max_residual_all: f64,
    pub future_timelike: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryFile {
    pub schema: u32,
    pub metric: String,
    /// `"alpha"` or `"k"`.
    pub target: String,
    pub target_value: [f64; 2],
    pub direction: [f64; 2],
    pub base: [f64; 2],
    pub window: [f64; 4],
    pub res: [usize; 2],
    pub tol: f64,
    pub converged: bool,
    pub iterations_used: usize,
    pub anchored: bool,
    pub poles: Vec<[f64; 2]>,
    pub history: Vec<HistoryEntry>,
    pub eikonal: EikonalSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityFile {
    pub schema: u32,
    pub available: bool,
    pub reason: Option<String>,
    pub defect: Option<f64>,
    pub defect_x: Option<f64>,
    pub defect_y: Option<f64>,
    pub pairs: usize,
    pub node_aligned: bool,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafDirection {
    pub leaf_id: usize,
    pub seed: [f64; 2],
    pub direction: [f64; 2],
    pub error: f64,
    pub chord_deviation: f64,
    pub left_window: bool,
    pub geodesic_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionFile {
    pub schema: u32,
    pub alpha: [f64; 2],
    pub max_direction_error: f64,
    pub leaves: Vec<LeafDirection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisjointnessFile {
    pub schema: u32,
    pub n_leaves: usize,
    pub min_separation: f64,
    pub disjoint: bool,
    pub max_geodesic_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionFile {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub measured: BTreeMap<String, Option<f64>>,
    pub notes: Vec<String>,
    pub seconds: f64,
}

impl From<&foliate_core::verify::CriterionResult> for CriterionFile {
    fn from(r: &foliate_core::verify::CriterionResult) -> Self {
        CriterionFile {
            id: r.id.clone(),
            title: r.title.clone(),
            passed: r.passed,
            measured: r.measured.iter().map(|(k, v)| (k.clone(), finite(*v))).collect(),
            notes: r.notes.clone(),
            seconds: r.seconds,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateFile {
    pub pass: bool,
    pub resolution: usize,
    pub min_abs_det: f64,
    pub min_neg_g22: f64,
    pub min_g11: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyFile {
    pub schema: u32,
    pub metric: String,
    pub gate: GateFile,
    pub passed: bool,
    pub criteria: Vec<CriterionFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance: Option<Vec<CriterionFile>>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    match value.get("schema").and_then(|s| s.as_u64()) {
        Some(v) if v == SCHEMA as u64 => {}
        other => {
            return Err(CliError::Invalid(format!(
                "{}: unsupported schema {other:?}, expected {SCHEMA}",
                path.display()
            )))
        }
    }
    Ok(serde_json::from_value(value)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub ux: f64,
    pub uy: f64,
    pub residual: f64,
    pub valid: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafRow {
    pub leaf_id: usize,
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// Rows in storage order (x fastest). `ux, uy` are the coordinate partials;
/// invalid nodes carry NaN.
pub fn field_rows(field: &ScalarField, metric: &MetricSpec) -> Vec<FieldRow> {
    field
        .nodes()
        .map(|(i, j, z)| {
            let k = field.index(i, j);
            if !field.valid[k] {
                return FieldRow {
                    x: z.x,
                    y: z.y,
                    u: f64::NAN,
                    ux: f64::NAN,
                    uy: f64::NAN,
                    residual: f64::NAN,
                    valid: 0,
                };
            }
            let g = metric.matrix(&z);
            let v = field.gradient[k];
            FieldRow {
                x: z.x,
                y: z.y,
                u: field.values[k],
                ux: field.differential[k].x,
                uy: field.differential[k].y,
                residual: (v.dot(&(g * v)) + 1.0).abs(),
                valid: 1,
            }
        })
        .collect()
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(CliError::from)).collect()
}

/// Rebuilds a potential from `field.csv`; gradients are raised from the
/// stored partials with `metric`.
pub fn read_field(path: &Path, metric: &MetricSpec) -> Result<ScalarField, CliError> {
    let rows: Vec<FieldRow> = read_rows(path)?;
    let bad = |m: &str| CliError::Invalid(format!("{}: {m}", path.display()));
    if rows.len() < 4 {
        return Err(bad("too few rows"));
    }
    let y0 = rows[0].y;
    let nx = rows.iter().take_while(|r| r.y == y0).count();
    if nx < 2 || !rows.len().is_multiple_of(nx) {
        return Err(bad("rows do not form a grid"));
    }
    let ny = rows.len() / nx;
    let last = &rows[rows.len() - 1];
    let window = Window::new(rows[0].x, last.x, y0, last.y).map_err(|e| bad(&e.to_string()))?;
    let res = Resolution::new(nx, ny).map_err(|e| bad(&e.to_string()))?;
    let valid: Vec<bool> = rows.iter().map(|r| r.valid == 1).collect();
    let values = rows.iter().map(|r| if r.valid == 1 { r.u } else { 0.0 }).collect();
    let mut f = ScalarField::from_values(window, res, FieldKind::Potential, values, valid);
    for (idx, (i, j, z)) in f.clone().nodes().enumerate() {
        let r = &rows[idx];
        if (r.x - z.x).abs() > 1e-9 * (1.0 + z.x.abs()) || (r.y - z.y).abs() > 1e-9 * (1.0 + z.y.abs()) {
            return Err(bad(&format!("row {idx} is not at node ({i}, {j})")));
        }
        if r.valid == 1 {
            let d = Vec2::new(r.ux, r.uy);
            f.differential[idx] = d;
            f.gradient[idx] = raise(&metric.matrix(&z), &d);
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field(metric: &MetricSpec) -> ScalarField {
        let w = Window::new(-0.5, 1.5, 0.0, 1.0).unwrap();
        let res = Resolution::new(5, 4).unwrap();
        let mut valid = vec![true; res.len()];
        valid[3] = false;
        let mut f = ScalarField::from_values(w, res, FieldKind::Potential, vec![0.0; res.len()], valid);
        for (k, (_, _, z)) in f.clone().nodes().enumerate() {
            f.values[k] = 0.25 * z.x - z.y;
            f.differential[k] = Vec2::new(0.25, -1.0);
            f.gradient[k] = raise(&metric.matrix(&z), &f.differential[k]);
        }
        f
    }

    #[test]
    fn field_csv_round_trips() {
        let m = MetricSpec::sheared(0.2);
        let f = sample_field(&m);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("field.csv");
        write_rows(&p, &field_rows(&f, &m)).unwrap();
        let g = read_field(&p, &m).unwrap();
        assert_eq!(g.window, f.window);
        assert_eq!(g.resolution, f.resolution);
        assert_eq!(g.valid, f.valid);
        for k in 0..f.values.len() {
            if f.valid[k] {
                assert_eq!(g.values[k], f.values[k]);
                assert_eq!(g.differential[k], f.differential[k]);
                assert!((g.gradient[k] - f.gradient[k]).norm() < 1e-12);
            }
        }
        let rows: Vec<FieldRow> = read_rows(&p).unwrap();
        assert!(rows[3].u.is_nan() && rows[3].valid == 0);
    }

    #[test]
    fn json_checks_schema() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cone.json");
        let c = ConeFile {
            schema: SCHEMA,
            metric: "flat".into(),
            m_minus: [0.5, 1.0],
            m_plus: [-0.5, 1.0],
            d: 0.0,
            length: 100.0,
        };
        write_json(&p, &c).unwrap();
        assert_eq!(read_json::<ConeFile>(&p).unwrap(), c);
        write_json(&p, &ConeFile { schema: SCHEMA + 1, ..c }).unwrap();
        let err = read_json::<ConeFile>(&p).unwrap_err();
        assert!(err.to_string().contains("schema"), "{err}");
    }

    #[test]
    fn ragged_csv_is_rejected() {
        let m = MetricSpec::flat();
        let f = sample_field(&m);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("field.csv");
        let mut rows = field_rows(&f, &m);
        rows.pop();
        write_rows(&p, &rows).unwrap();
        assert_eq!(read_field(&p, &m).unwrap_err().exit_code(), 2);
    }
}
