use thiserror::Error;

/// Errors raised by the solver pipeline and its building blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("corner mismatch: col[0] = {col0} but row[0] = {row0}")]
    CornerMismatch { col0: String, row0: String },

    #[error("size guard exceeded: n = {n} > {guard}")]
    SizeGuard { n: usize, guard: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometry violation: {0}")]
    GeometryViolation(String),

    #[error("Moebius map validation failed: fourth-point residual {residual:.3e}")]
    MapValidation { residual: f64 },

    #[error("shift collision: {side} shift #{index} coincides with a diagonal entry")]
    ShiftCollision { side: &'static str, index: usize },

    #[error("rank deficient interpolation basis (requested {requested}, kept {kept})")]
    RankDeficient { requested: usize, kept: usize },

    #[error("singular reduced block at vertex {vertex}")]
    SingularBlock { vertex: usize },

    #[error("numerically singular system: {0}")]
    NumericallySingular(String),

    #[error("format unsupported: {0}")]
    FormatUnsupported(String),

    #[error("dense matrix is singular")]
    Singular,

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
