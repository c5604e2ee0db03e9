use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("characteristic point, maximizer not unique (H = {0:e})")]
    CharacteristicPoint(f64),

    #[error("zero covector")]
    ZeroCovector,

    #[error("point is not in the characteristic set (residual {0:e})")]
    NotInChar(f64),

    #[error("empty target")]
    EmptyTarget,

    #[error("degenerate mask: {0}")]
    DegenerateMask(&'static str),

    #[error("no convergence after {sweeps} sweeps (residual {residual:e})")]
    NotConverged { sweeps: usize, residual: f64 },

    #[error("control outside the closed unit ball (|u| = {0})")]
    ControlOutOfBall(f64),

    #[error("unknown system '{name}'{hint}; available: {available}")]
    UnknownSystem {
        name: String,
        /// `" (did you mean 'x'?)"` or empty.
        hint: String,
        available: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(format!($($arg)*))
    };
}
pub(crate) use invalid;
