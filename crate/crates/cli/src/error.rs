use std::fmt;

use serde::Serialize;
use tzsolve_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Config,
    Numerical,
    Io,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Config => 2,
            Kind::Numerical => 3,
            Kind::Io => 4,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: Kind::Config, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { kind: Kind::Numerical, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { kind: Kind::Io, message: message.into() }
    }

    /// `{"error": {"kind": ..., "code": ..., "message": ...}}`
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind,
                "code": self.kind.exit_code(),
                "message": self.message,
            }
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Io(_) | Error::Parse(_) => Kind::Io,
            Error::NumericallySingular(_)
            | Error::SingularBlock { .. }
            | Error::Singular
            | Error::RankDeficient { .. }
            | Error::ShiftCollision { .. }
            | Error::MapValidation { .. } => Kind::Numerical,
            Error::InvalidSize(_)
            | Error::CornerMismatch { .. }
            | Error::SizeGuard { .. }
            | Error::LengthMismatch { .. }
            | Error::Domain(_)
            | Error::GeometryViolation(_)
            | Error::FormatUnsupported(_) => Kind::Config,
        };
        Self { kind, message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;
