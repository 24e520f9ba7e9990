use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the workbench.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Not enough data (peaks, beats, samples) to compute the requested quantity.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("SNR undefined (no noise)")]
    SnrUndefined,

    #[error("zero signal power")]
    ZeroSignalPower,

    #[error("no R peaks found")]
    NoPeaks,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// Simulated oscillator frequency left the physical range.
    #[error("nonpositive oscillator frequency {freq_hz} Hz on oscillator {index}")]
    NonPositiveFrequency { index: usize, freq_hz: f64 },

    #[error("BCH decoding failed: more than {t} errors")]
    DecodeFailure { t: usize },

    #[error("key reproduction failed")]
    KeyFailure,

    #[error("config {path}: {msg}")]
    Config { path: PathBuf, msg: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// True for errors caused by bad input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Parameter(_) | Error::Config { .. } | Error::Parse(_) | Error::Dimension { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
