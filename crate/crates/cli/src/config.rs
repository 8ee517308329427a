use std::path::{Path, PathBuf};

use clap::Args;
use foliate_core::maxdist::{Resolution, Window};
use foliate_core::metric::MetricSpec;
use foliate_core::Vec2;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Flags shared by every subcommand. Each may also come from `--config`;
/// flags win over the file.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Metric-spec JSON file, or one of the built-in names flat, conformal,
    /// sheared.
    #[arg(long, value_name = "PATH")]
    pub metric: Option<String>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Run-config JSON with defaults for any of the flags.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "X0,X1,Y0,Y1", value_parser = parse_list::<4>, allow_hyphen_values = true)]
    pub window: Option<[f64; 4]>,
    #[arg(long, value_name = "NX,NY", value_parser = parse_list::<2>)]
    pub res: Option<[f64; 2]>,
    #[arg(long, value_name = "AX,AY", value_parser = parse_list::<2>, conflicts_with = "k", allow_hyphen_values = true)]
    pub alpha: Option<[f64; 2]>,
    #[arg(long, value_name = "KX,KY", value_parser = parse_list::<2>, allow_hyphen_values = true)]
    pub k: Option<[f64; 2]>,
    #[arg(long, value_name = "T")]
    pub tol: Option<f64>,
    #[arg(long, value_name = "H")]
    pub horizon: Option<f64>,
    /// RNG seed for sampled checks.
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Also run the broken-path maximization and report the agreement.
    #[arg(long)]
    pub cross_check: bool,
    /// Integration length of the null curves.
    #[arg(long, value_name = "L")]
    pub length: Option<f64>,
    /// Fixed geodesic step.
    #[arg(long, value_name = "H")]
    pub step: Option<f64>,
}

/// On-disk run config; every field optional.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub metric: Option<String>,
    pub out: Option<PathBuf>,
    pub window: Option<[f64; 4]>,
    pub res: Option<[usize; 2]>,
    pub alpha: Option<[f64; 2]>,
    pub k: Option<[i64; 2]>,
    pub tol: Option<f64>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub cross_check: Option<bool>,
    pub length: Option<f64>,
    pub step: Option<f64>,
    pub x: Option<[f64; 2]>,
    pub y: Option<[f64; 2]>,
    pub p: Option<[f64; 2]>,
    pub poles: Option<usize>,
    pub leaves: Option<usize>,
}

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_LENGTH: f64 = 100.0;
pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_RES: usize = 65;

pub fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got `{s}`"));
    }
    let mut out = [0.0f64; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format!("`{p}` is not a number"))?;
        if !o.is_finite() {
            return Err(format!("`{p}` is not finite"));
        }
    }
    Ok(out)
}

/// Flags merged with the optional config file.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub metric_source: String,
    pub metric: MetricSpec,
    pub out: PathBuf,
    pub file: RunConfig,
    pub common: Common,
}

pub fn load_metric(source: &str) -> Result<MetricSpec, CliError> {
    let path = Path::new(source);
    if path.exists() {
        return MetricSpec::from_path(path).map_err(|e| CliError::Invalid(e.to_string()));
    }
    match source {
        "flat" => Ok(MetricSpec::flat()),
        "conformal" | "sheared" => MetricSpec::from_json_str(&format!("{{\"family\": \"{source}\"}}"))
            .map_err(|e| CliError::Invalid(e.to_string())),
        _ => Err(CliError::Invalid(format!("metric spec `{source}` is neither a file nor a built-in family"))),
    }
}

impl Resolved {
    pub fn new(common: &Common) -> Result<Self, CliError> {
        let file = match &common.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        let source = common
            .metric
            .clone()
            .or_else(|| file.metric.clone())
            .ok_or_else(|| CliError::Invalid("--metric is required".into()))?;
        let metric = load_metric(&source)?;
        let out = common.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("."));
        Ok(Resolved {
            metric_source: source,
            metric,
            out,
            file,
            common: common.clone(),
        })
    }

    pub fn tol(&self) -> Result<f64, CliError> {
        positive("tol", self.common.tol.or(self.file.tol).unwrap_or(DEFAULT_TOL))
    }

    pub fn length(&self) -> Result<f64, CliError> {
        positive("length", self.common.length.or(self.file.length).unwrap_or(DEFAULT_LENGTH))
    }

    pub fn step(&self) -> Result<f64, CliError> {
        positive("step", self.common.step.or(self.file.step).unwrap_or(DEFAULT_STEP))
    }

    pub fn seed(&self) -> u64 {
        self.common.seed.or(self.file.seed).unwrap_or(DEFAULT_SEED)
    }

    pub fn horizon(&self) -> Option<f64> {
        self.common.horizon.or(self.file.horizon)
    }

    pub fn cross_check(&self) -> bool {
        self.common.cross_check || self.file.cross_check.unwrap_or(false)
    }

    pub fn window(&self) -> Result<Window, CliError> {
        match self.common.window.or(self.file.window) {
            Some([x0, x1, y0, y1]) => Window::new(x0, x1, y0, y1).map_err(|e| CliError::Invalid(e.to_string())),
            None => Ok(Window::unit()),
        }
    }

    pub fn resolution(&self) -> Result<Resolution, CliError> {
        let (nx, ny) = match (self.common.res, self.file.res) {
            (Some([a, b]), _) => (as_count("res", a)?, as_count("res", b)?),
            (None, Some([a, b])) => (a, b),
            (None, None) => (DEFAULT_RES, DEFAULT_RES),
        };
        Resolution::new(nx, ny).map_err(|e| CliError::Invalid(e.to_string()))
    }

    /// `--alpha` or `--k`; `None` when neither is given.
    pub fn target(&self) -> Result<Option<foliate_core::busemann::Target>, CliError> {
        use foliate_core::busemann::Target;
        let alpha = self.common.alpha.or(if self.common.k.is_none() { self.file.alpha } else { None });
        let k = match self.common.k {
            Some([a, b]) => Some([as_int("k", a)?, as_int("k", b)?]),
            None if self.common.alpha.is_none() => self.file.k,
            None => None,
        };
        match (alpha, k) {
            (Some(_), Some(_)) => Err(CliError::Invalid("give either alpha or k, not both".into())),
            (Some([x, y]), None) => {
                let a = Vec2::new(x, y);
                if a.norm() == 0.0 {
                    return Err(CliError::Invalid("alpha must be nonzero".into()));
                }
                Ok(Some(Target::Direction(a.normalize())))
            }
            (None, Some(k)) => Ok(Some(Target::Deck(k))),
            (None, None) => Ok(None),
        }
    }

    pub fn point(&self, flag: Option<[f64; 2]>, from_file: Option<[f64; 2]>) -> Option<Vec2> {
        flag.or(from_file).map(|[x, y]| Vec2::new(x, y))
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Invalid(format!("{name} must be positive, got {v}")))
    }
}

fn as_count(name: &str, v: f64) -> Result<usize, CliError> {
    if v.fract() == 0.0 && (1.0..1e6).contains(&v) {
        Ok(v as usize)
    } else {
        Err(CliError::Invalid(format!("{name} entries must be positive integers, got {v}")))
    }
}

fn as_int(name: &str, v: f64) -> Result<i64, CliError> {
    if v.fract() == 0.0 && v.abs() < 1e9 {
        Ok(v as i64)
    } else {
        Err(CliError::Invalid(format!("{name} entries must be integers, got {v}")))
    }
}
