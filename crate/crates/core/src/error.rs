use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field shape mismatch: expected {expected} samples, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("permittivity pole on the real axis at omega = {omega} (undamped resonance)")]
    PoleOnRealAxis { omega: f64 },

    #[error("complex matter representation requires gamma < omega (gamma = {gamma}, omega = {omega})")]
    Overdamped { gamma: f64, omega: f64 },

    #[error("singular matrix in {0}")]
    SingularMatrix(&'static str),

    #[error("pulse bandwidth not resolved: |k0| + 4 kappa = {required} exceeds the Nyquist limit {nyquist}")]
    BandwidthNotResolved { required: f64, nyquist: f64 },

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("invalid absorber: {0}")]
    InvalidAbsorber(String),

    #[error("invalid propagator configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite state value at step {step} (time {time})")]
    NonFinite { step: usize, time: f64 },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("config syntax error at line {line}, column {column}: {message}")]
    ConfigSyntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config validation failed:\n{}", .0.join("\n"))]
    ConfigValidation(Vec<String>),

    #[error("spectra analysis: {0}")]
    Spectra(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit status: 1 for invalid input, 2 for runtime failures, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Snapshot(_) => 3,
            Error::NonFinite { .. } | Error::SingularMatrix(_) => 2,
            _ => 1,
        }
    }
}
