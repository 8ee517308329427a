use foliate_core::busemann::BusemannError;
use foliate_core::causal::CausalError;
use foliate_core::geodesic::GeodesicError;
use foliate_core::lines::LinesError;
use foliate_core::maxdist::MaxDistError;
use foliate_core::metric::MetricError;

#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Invalid(String),
    /// Exit code 1.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<GeodesicError> for CliError {
    fn from(e: GeodesicError) -> Self {
        match e {
            GeodesicError::InvalidInput(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<CausalError> for CliError {
    fn from(e: CausalError) -> Self {
        match e {
            CausalError::InvalidInput(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<MaxDistError> for CliError {
    fn from(e: MaxDistError) -> Self {
        match e {
            MaxDistError::InvalidInput(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<LinesError> for CliError {
    fn from(e: LinesError) -> Self {
        match e {
            LinesError::InvalidInput(_) | LinesError::OutsideCone(..) => CliError::Invalid(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<BusemannError> for CliError {
    fn from(e: BusemannError) -> Self {
        match e {
            BusemannError::InvalidInput(_) | BusemannError::WindowTooSmall | BusemannError::OutOfChart { .. } => {
                CliError::Invalid(e.to_string())
            }
            BusemannError::Lines(l) => l.into(),
            BusemannError::MaxDist(m) => m.into(),
            BusemannError::Geodesic(g) => g.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}
