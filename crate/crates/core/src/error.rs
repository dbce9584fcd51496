use thiserror::Error;

/// Errors raised by simulation, filtering, estimation and the sweep harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("trajectory too short: {points} point(s), need at least {required}")]
    TrajectoryTooShort { points: usize, required: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("width {delta} is narrower than the grid spacing {dt}")]
    TooNarrow { delta: f64, dt: f64 },

    #[error("trajectories do not share a grid ({reason})")]
    GridMismatch { reason: String },

    #[error("linear system is singular (condition number {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("path blew up at step {step} (t = {time}): |x| exceeded {bound:e}")]
    BlowUp { step: usize, time: f64, bound: f64 },

    #[error("quadrature did not converge: refinement changed the result by {change:e}")]
    QuadratureNonConvergence { change: f64 },

    #[error("fast potential is not separable; the general cell problem is not supported")]
    NonSeparable,

    #[error("multiscale drift estimate is numerically rank-deficient")]
    DegenerateAlpha,

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("malformed trajectory file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input, as opposed to failures while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::TrajectoryTooShort { .. }
                | Error::DimensionMismatch { .. }
                | Error::TooNarrow { .. }
                | Error::GridMismatch { .. }
                | Error::NonSeparable
                | Error::Config { .. }
                | Error::Format(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
