use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular update: denominator {denominator:e} below guard {guard:e}")]
    SingularUpdate { denominator: f64, guard: f64 },

    #[error("numerical error: {what} (iterate norm {iterate_norm:e})")]
    Numerical { what: String, iterate_norm: f64 },

    #[error("unsupported diagnostic: {0}")]
    UnsupportedDiagnostic(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
