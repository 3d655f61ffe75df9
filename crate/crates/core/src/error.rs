use thiserror::Error;

use crate::sweep::PortResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("scene file: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("evanescent region: {0}")]
    Evanescent(String),
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("series truncation did not converge: {0}")]
    Convergence(String),
    #[error("FDTD instability: {0}")]
    Stability(String),
    #[error("contour error: {0}")]
    Contour(String),
    #[error("beamwidth undefined: {0}")]
    BeamwidthUndefined(String),
    #[error("degenerate pattern: {0}")]
    DegeneratePattern(String),
    #[error("port F{port} failed: {source}")]
    PortFailed {
        port: usize,
        source: Box<Error>,
        /// Ports that finished before the failure, in port order.
        partial: Vec<PortResult>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse failure classes, one per process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Configuration,
    Numerical,
    Io,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 2,
            ErrorClass::Configuration => 3,
            ErrorClass::Numerical => 4,
            ErrorClass::Io => 5,
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Usage(_) => ErrorClass::Usage,
            Error::Domain(_)
            | Error::Config(_)
            | Error::Parse(_)
            | Error::Input(_)
            | Error::Evanescent(_)
            | Error::UnsupportedGeometry(_)
            | Error::Contour(_) => ErrorClass::Configuration,
            Error::Convergence(_)
            | Error::Stability(_)
            | Error::BeamwidthUndefined(_)
            | Error::DegeneratePattern(_) => ErrorClass::Numerical,
            Error::PortFailed { source, .. } => source.class(),
            Error::Io(_) => ErrorClass::Io,
        }
    }
}
