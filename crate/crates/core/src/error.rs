use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A numeric argument lies outside the domain of the operation.
    #[error("parameter `{name}` out of range: {reason}")]
    Range { name: &'static str, reason: String },

    #[error("negative coordinate `{0}`: points must lie in [0, inf)")]
    NegativeInput(String),

    #[error("dyadic level {level} exceeds the configured bound |j| <= {bound}")]
    LevelOutOfRange { level: i64, bound: i64 },

    #[error("fractional order s = {0} must lie in (0, 1) for the integral operator")]
    OrderOutOfRange(f64),

    /// A series or descent hit its hard cap before the tail certificate held.
    #[error("{what}: cap of {limit} reached before the tail bound was certified")]
    CapExceeded { what: &'static str, limit: usize },

    #[error("quadrature did not converge: estimated error {achieved:e} above requested {requested:e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("quadrature and closed form disagree: relative discrepancy {0:e}")]
    QuadratureMismatch(f64),

    #[error("sequence not converging: {0}")]
    NonConvergence(String),

    #[error("eigenrelation residual {residual:e} exceeds {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("pieces overlap: {0}")]
    OverlappingPieces(String),

    #[error("dimension {0} is not supported here")]
    UnsupportedDimension(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("line {line}: {message}")]
    ParseLine { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn range_err<T>(name: &'static str, reason: impl Into<String>) -> Result<T> {
    Err(Error::Range {
        name,
        reason: reason.into(),
    })
}
