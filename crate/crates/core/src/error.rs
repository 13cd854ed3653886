//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    /// A physical input that must be strictly positive was not.
    #[error("parameter `{field}` must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },

    /// A physical input was NaN or infinite.
    #[error("parameter `{field}` must be finite, got {value}")]
    NotFinite { field: &'static str, value: f64 },

    /// The high-temperature validity condition k_B T / (hbar omega_m) >= floor failed.
    #[error(
        "thermal ratio k_B T / (hbar omega_m) = {ratio:.6e} is below the \
         validity floor {floor}; the mirror damping model assumes a hot bath"
    )]
    ValidityFloor { ratio: f64, floor: f64 },

    /// An argument was outside the mathematical domain of the operation.
    #[error("domain error in {context}: {detail}")]
    Domain {
        context: &'static str,
        detail: String,
    },

    /// A run configuration failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A deterministic integration produced a non-finite state.
    #[error("integration diverged at t = {time_s:.6e} s")]
    Diverged { time_s: f64 },

    /// Not enough samples to estimate the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A correlation coefficient was requested where a variance vanishes.
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
}
