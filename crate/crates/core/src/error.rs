use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Lamé parameters lambda={lambda}, mu={mu}: both must be positive and finite")]
    InvalidLame { lambda: f64, mu: f64 },

    #[error("source and receiver points coincide")]
    CoincidentPoints,

    #[error("source point must lie strictly below the surface, got y3 = {0}")]
    SourceNotBelowSurface(f64),

    #[error("receiver point lies above the surface, got x3 = {0}")]
    ReceiverAboveSurface(f64),

    #[error("fault plane reaches depth {shallowest} but depth_min is {depth_min}")]
    DepthViolation { shallowest: f64, depth_min: f64 },

    #[error("point ({y1}, {y2}) lies outside the reference rectangle")]
    OutsideRectangle { y1: f64, y2: f64 },

    #[error("{0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("requested rank {requested} exceeds numerical rank {available}")]
    RankTooLarge { requested: usize, available: usize },

    #[error("spectral gap at rank {rank} is {gap:.3e}, below the required {required}")]
    SpectralGap { rank: usize, gap: f64, required: f64 },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("operator cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the inputs rather than by the computation or the file system.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidLame { .. }
                | Error::DepthViolation { .. }
                | Error::OutsideRectangle { .. }
                | Error::Domain(_)
                | Error::DimensionMismatch { .. }
                | Error::RankTooLarge { .. }
                | Error::SpectralGap { .. }
                | Error::Config { .. }
                | Error::Json(_)
        )
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
