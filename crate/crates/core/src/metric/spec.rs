use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fourier::{FourierSeries, FourierTerm};
use super::jet::Jet;
use super::{Metric, MetricError};
use crate::Vec2;

/// Default perturbation amplitudes of the built-in families.
pub const DEFAULT_CONFORMAL_AMPLITUDE: f64 = 0.1;
pub const DEFAULT_SHEAR_AMPLITUDE: f64 = 0.2;

/// Schema version written into metric-spec files.
pub const METRIC_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `dx² − dy²`.
    Flat,
    /// `e^{2f}(dx² − dy²)` with `f = A·sin(2πx)·sin(2πy)`.
    Conformal { amplitude: f64 },
    /// `dx² + 2A·sin(2πx)·dx dy − dy²`.
    Sheared { amplitude: f64 },
    Raw,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Flat => "flat",
            Family::Conformal { .. } => "conformal",
            Family::Sheared { .. } => "sheared",
            Family::Raw => "raw",
        }
    }
}

/// A Z²-periodic Lorentzian metric `e^{2f}·(g11 dx² + 2 g12 dx dy + g22 dy²)`.
///
/// The coordinate vector (0,1) is declared future-pointing; admissible specs
/// have `g22 < 0` everywhere.
#[derive(Clone, Debug)]
pub struct MetricSpec {
    family: Family,
    g11: FourierSeries,
    g12: FourierSeries,
    g22: FourierSeries,
    /// Conformal exponent `f`; empty for none.
    conformal: FourierSeries,
    constant: bool,
}

impl MetricSpec {
    pub fn raw(
        g11: FourierSeries,
        g12: FourierSeries,
        g22: FourierSeries,
        conformal: Option<FourierSeries>,
    ) -> Self {
        Self::build(Family::Raw, g11, g12, g22, conformal.unwrap_or_default())
    }

    fn build(
        family: Family,
        g11: FourierSeries,
        g12: FourierSeries,
        g22: FourierSeries,
        conformal: FourierSeries,
    ) -> Self {
        let constant = g11.is_constant()
            && g12.is_constant()
            && g22.is_constant()
            && conformal.is_constant();
        MetricSpec {
            family,
            g11,
            g12,
            g22,
            conformal,
            constant,
        }
    }

    pub fn flat() -> Self {
        Self::build(
            Family::Flat,
            FourierSeries::constant(1.0),
            FourierSeries::zero(),
            FourierSeries::constant(-1.0),
            FourierSeries::zero(),
        )
    }

    pub fn conformal(amplitude: f64) -> Self {
        // sin a · sin b = ½cos(a−b) − ½cos(a+b)
        let f = FourierSeries::new(vec![
            FourierTerm::new(1, -1, 0.5 * amplitude, 0.0),
            FourierTerm::new(1, 1, -0.5 * amplitude, 0.0),
        ]);
        Self::build(
            Family::Conformal { amplitude },
            FourierSeries::constant(1.0),
            FourierSeries::zero(),
            FourierSeries::constant(-1.0),
            f,
        )
    }

    pub fn sheared(amplitude: f64) -> Self {
        Self::build(
            Family::Sheared { amplitude },
            FourierSeries::constant(1.0),
            FourierSeries::new(vec![FourierTerm::new(1, 0, 0.0, amplitude)]),
            FourierSeries::constant(-1.0),
            FourierSeries::zero(),
        )
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn g11(&self) -> &FourierSeries {
        &self.g11
    }

    pub fn g12(&self) -> &FourierSeries {
        &self.g12
    }

    pub fn g22(&self) -> &FourierSeries {
        &self.g22
    }

    pub fn conformal_exponent(&self) -> &FourierSeries {
        &self.conformal
    }

    pub fn from_json_str(s: &str) -> Result<Self, MetricError> {
        let file: MetricSpecFile =
            serde_json::from_str(s).map_err(|e| MetricError::Parse(e.to_string()))?;
        file.into_spec()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, MetricError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| MetricError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_file(&self) -> MetricSpecFile {
        let mut params = BTreeMap::new();
        let terms = |s: &FourierSeries| {
            Some(
                s.terms()
                    .iter()
                    .map(|t| vec![t.m as f64, t.n as f64, t.a, t.b])
                    .collect::<Vec<_>>(),
            )
        };
        match self.family {
            Family::Flat => MetricSpecFile::named("flat", params),
            Family::Conformal { amplitude } | Family::Sheared { amplitude } => {
                params.insert("amplitude".into(), amplitude);
                MetricSpecFile::named(self.family.name(), params)
            }
            Family::Raw => MetricSpecFile {
                schema: Some(METRIC_SCHEMA_VERSION),
                family: "raw".into(),
                params,
                g11: terms(&self.g11),
                g12: terms(&self.g12),
                g22: terms(&self.g22),
                conformal_exponent: if self.conformal.terms().is_empty() {
                    None
                } else {
                    terms(&self.conformal)
                },
            },
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("metric spec serializes")
    }
}

impl Metric for MetricSpec {
    fn components(&self, p: &Vec2) -> [Jet; 3] {
        let base = [self.g11.jet(p), self.g12.jet(p), self.g22.jet(p)];
        if self.conformal.terms().is_empty() {
            return base;
        }
        let factor = self.conformal.jet(p).scale(2.0).exp();
        base.map(|g| factor.mul(g))
    }

    fn is_constant(&self) -> bool {
        self.constant
    }
}

/// On-disk form of a metric spec.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricSpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<u32>,
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g11: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g12: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g22: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal_exponent: Option<Vec<Vec<f64>>>,
}

impl MetricSpecFile {
    fn named(family: &str, params: BTreeMap<String, f64>) -> Self {
        MetricSpecFile {
            schema: Some(METRIC_SCHEMA_VERSION),
            family: family.into(),
            params,
            g11: None,
            g12: None,
            g22: None,
            conformal_exponent: None,
        }
    }

    pub fn into_spec(self) -> Result<MetricSpec, MetricError> {
        if let Some(v) = self.schema {
            if v != METRIC_SCHEMA_VERSION {
                return Err(MetricError::Parse(format!("unsupported schema version {v}")));
            }
        }
        let amplitude = |default: f64| -> Result<f64, MetricError> {
            for key in self.params.keys() {
                if key != "amplitude" {
                    return Err(MetricError::Parse(format!(
                        "unknown parameter `{key}` for family `{}`",
                        self.family
                    )));
                }
            }
            let a = self.params.get("amplitude").copied().unwrap_or(default);
            if !a.is_finite() {
                return Err(MetricError::Parse("amplitude must be finite".into()));
            }
            Ok(a)
        };
        match self.family.as_str() {
            "flat" => Ok(MetricSpec::flat()),
            "conformal" => Ok(MetricSpec::conformal(amplitude(DEFAULT_CONFORMAL_AMPLITUDE)?)),
            "sheared" => Ok(MetricSpec::sheared(amplitude(DEFAULT_SHEAR_AMPLITUDE)?)),
            "raw" => {
                let component = |name: &str, rows: &Option<Vec<Vec<f64>>>| {
                    rows.as_ref()
                        .ok_or_else(|| MetricError::Parse(format!("raw spec is missing `{name}`")))
                        .and_then(|r| parse_terms(name, r))
                };
                let conformal = match &self.conformal_exponent {
                    Some(rows) => Some(parse_terms("conformal_exponent", rows)?),
                    None => None,
                };
                Ok(MetricSpec::raw(
                    component("g11", &self.g11)?,
                    component("g12", &self.g12)?,
                    component("g22", &self.g22)?,
                    conformal,
                ))
            }
            other => Err(MetricError::Parse(format!("unknown family `{other}`"))),
        }
    }
}

fn parse_terms(name: &str, rows: &[Vec<f64>]) -> Result<FourierSeries, MetricError> {
    let mut terms = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let [m, n, a, b] = row[..] else {
            return Err(MetricError::Parse(format!(
                "{name}[{i}]: expected [m, n, a, b], got {} entries",
                row.len()
            )));
        };
        let freq = |f: f64| -> Result<i32, MetricError> {
            if f.fract() != 0.0 || !f.is_finite() || f.abs() > 1e6 {
                Err(MetricError::Parse(format!(
                    "{name}[{i}]: frequency {f} is not an integer"
                )))
            } else {
                Ok(f as i32)
            }
        };
        if !a.is_finite() || !b.is_finite() {
            return Err(MetricError::Parse(format!("{name}[{i}]: non-finite coefficient")));
        }
        terms.push(FourierTerm::new(freq(m)?, freq(n)?, a, b));
    }
    Ok(FourierSeries::new(terms))
}
