use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the simulation and analysis layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "propagation over {distance_m} m is aliased on this grid (max alias-free distance {max_distance_m} m)"
    )]
    Aliasing {
        distance_m: f64,
        max_distance_m: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("position {position_m} m lies outside the grid window [{min_m}, {max_m}] m")]
    OutOfWindow {
        position_m: f64,
        min_m: f64,
        max_m: f64,
    },

    #[error("amplitude has zero norm")]
    ZeroNorm,

    #[error("no pattern: max/min ratio {ratio} is below the flatness threshold")]
    NoPattern { ratio: f64 },

    #[error("half maximum is not bracketed inside the scan window")]
    WindowTooSmall,

    #[error("sinc^2 fit did not converge after {iterations} iterations")]
    FitFailed { iterations: usize },

    #[error("object at the focal plane: image at infinity")]
    ImageAtInfinity,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
