use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulation and reconstruction pipeline.
#[derive(Debug, Error)]
pub enum SwiError {
    #[error("wavelengths are equal ({0} nm): synthetic wavelength is infinite")]
    EqualWavelengths(f64),
    #[error("invalid wavelength {0} nm: must be positive and finite")]
    InvalidWavelength(f64),
    #[error("too few shifts: M = {m}, N = {n} (both must be at least 3)")]
    TooFewShifts { m: usize, n: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("bilateral filtering requires a guide image")]
    MissingGuide,
    #[error("no jointly valid pixels to compare")]
    EmptyMask,
    #[error("point sequence is empty")]
    EmptyPattern,
    #[error("scan budget yields zero points per dimension")]
    ZeroPoints,
    #[error("samples span {span_um} um, less than one envelope period ({period_um} um)")]
    InsufficientSpan { span_um: f64, period_um: f64 },
    #[error("sinusoid fit diverged: residual fraction {0}")]
    FitDiverged(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl SwiError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SwiError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        SwiError::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        SwiError::InvalidParameter(message.into())
    }
}

pub type Result<T> = std::result::Result<T, SwiError>;
