use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error classes. The CLI maps these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Io,
    Format,
    Numeric,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Io => "io",
            ErrorCategory::Format => "format",
            ErrorCategory::Numeric => "numeric",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("duplicate unit id {0}")]
    DuplicateUnit(u64),
    #[error("line {line}: date {date} outside study window")]
    DateOutsideWindow { line: usize, date: chrono::NaiveDate },
    #[error("unknown unit id {0}")]
    UnknownUnit(u64),
    #[error("unknown platform {0:?}")]
    UnknownPlatform(String),
    #[error("bad magic {:?}, expected \"EMB1\"", String::from_utf8_lossy(found))]
    BadMagic { found: [u8; 4] },
    #[error("unsupported EMB1 version {0}")]
    BadVersion(u32),
    #[error("truncated file: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("row {row} (unit {unit_id}) has norm {norm}, expected 1")]
    NormViolation { row: usize, unit_id: u64, norm: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("non-stationary model: spectral radius of weights is {0}")]
    NonStationary(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("{0}")]
    Format(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } => ErrorCategory::Io,
            Error::MalformedRecord { .. }
            | Error::DuplicateUnit(_)
            | Error::DateOutsideWindow { .. }
            | Error::UnknownUnit(_)
            | Error::UnknownPlatform(_)
            | Error::BadMagic { .. }
            | Error::BadVersion(_)
            | Error::Truncated { .. }
            | Error::NormViolation { .. }
            | Error::Format(_) => ErrorCategory::Format,
            Error::DimMismatch { .. }
            | Error::ZeroVector
            | Error::NonStationary(_)
            | Error::EmptyInput(_) => ErrorCategory::Numeric,
            Error::InvalidParameter(_) => ErrorCategory::Config,
        }
    }
}
