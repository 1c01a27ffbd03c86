use thiserror::Error;

/// Errors produced by the solvers, fits and the experiment layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("m = {m} lies in the extinction range m <= m_c = {m_c}")]
    ExtinctionRange { m: f64, m_c: f64 },

    #[error("m = {m} is the borderline exponent m1 = N/(N+2s); the logarithmic case is not supported")]
    BorderlineExponent { m: f64 },

    #[error("reaction term violates {0}")]
    InvalidReaction(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("grid with {points} points exceeds the dense oracle cap of {cap}")]
    GridTooLarge { points: usize, cap: usize },

    #[error("quadrature did not converge at r = {r}: achieved error estimate {achieved:e}")]
    Quadrature { r: f64, achieved: f64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("instability at step {step} (t = {time}): max grew by factor {growth}")]
    Instability { step: usize, time: f64, growth: f64 },

    #[error("self-similar profile did not converge by t = {t_end}: discrepancy {discrepancy}")]
    NonConvergence { t_end: f64, discrepancy: f64 },

    #[error("missing calibration: {0}")]
    MissingCalibration(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("level {lambda} outside the admissible range {range}")]
    LevelOutOfRange { lambda: f64, range: String },

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        key: key.into(),
        reason: reason.into(),
    }
}
