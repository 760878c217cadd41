use conflab_core::conformal::MapError;
use conflab_core::geodesic::GeodesicError;
use conflab_core::geometry::GeometryError;
use conflab_core::integrals::IntegralError;
use conflab_core::poincare::PoincareError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Numerical(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::ResolutionOverflow { .. } => Self::Numerical(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

impl From<GeodesicError> for CliError {
    fn from(e: GeodesicError) -> Self {
        match e {
            GeodesicError::Geometry(g) => g.into(),
            GeodesicError::OutsideDomain(_) | GeodesicError::NoCell(_) => Self::Usage(e.to_string()),
            GeodesicError::Unreachable | GeodesicError::EmptyMask => Self::Numerical(e.to_string()),
        }
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        match e {
            MapError::Singular(_)
            | MapError::BranchViolation(_)
            | MapError::QuadratureNonfinite(_)
            | MapError::NoConvergence { .. } => Self::Numerical(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

impl From<IntegralError> for CliError {
    fn from(e: IntegralError) -> Self {
        match e {
            IntegralError::Map(m) => m.into(),
            IntegralError::NonfiniteIntegrand(_) => Self::Numerical(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

impl From<PoincareError> for CliError {
    fn from(e: PoincareError) -> Self {
        match e {
            PoincareError::Geometry(g) => g.into(),
            PoincareError::Geodesic(g) => g.into(),
            PoincareError::Integral(i) => i.into(),
            PoincareError::Map(m) => m.into(),
            PoincareError::InvalidParameter(_) => Self::Usage(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}
