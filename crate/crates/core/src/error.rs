use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A value object could not be built from the given parts.
    #[error("invalid construction: {0}")]
    Construction(String),

    /// Evaluation point coincides with a point mass.
    #[error("evaluation point is within {tolerance:e} of center #{index}")]
    Pole { index: usize, tolerance: f64 },

    #[error("duplicate centers at {center:?}; merge their masses first (PointMassMeasure::merged)")]
    DuplicateCenters { center: Vec<f64> },

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A numerical procedure did not reach its declared tolerance.
    #[error("tolerance failure: {message}")]
    Tolerance { message: String, best: Option<f64> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn construction(msg: impl Into<String>) -> Self {
        Error::Construction(msg.into())
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Tolerance { .. } => 3,
            _ => 2,
        }
    }
}
