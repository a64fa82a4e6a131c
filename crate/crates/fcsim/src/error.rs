//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// A configuration value is out of its documented domain.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The requested duration/oversampling combination would synthesize more
    /// samples than the configured budget allows.
    #[error("sample budget exceeded: run needs {needed} samples, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },

    /// A phase trajectory stopped being strictly increasing.
    #[error("phase not strictly increasing at sample {index}")]
    NonMonotonicPhase { index: usize },

    /// A timestamp sequence is not strictly increasing.
    #[error("timestamps not strictly increasing at index {index}")]
    NonMonotonicTimes { index: usize },

    /// Quantization could not restore strict ordering within one grid step;
    /// the stamp stream is unphysically dense for the interpolator.
    #[error("quantization collision cascade at index {index}: stamps denser than one grid step")]
    QuantizeCollision { index: usize },

    /// An operation needs more samples than the input provides.
    #[error("series too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    /// Requested Allan deviation averaging time is not a multiple of the
    /// sample interval.
    #[error("tau {tau} s is not an integer multiple of the sample interval {interval} s")]
    TauNotMultiple { tau: f64, interval: f64 },

    /// No rising edge was found near a resampling trigger.
    #[error("signal lost: no edge within {window} s after trigger at {trigger} s")]
    SignalLost { trigger: f64, window: f64 },

    /// The PLL output diverged from the nominal frequency.
    #[error("loop instability detected at t = {t} s (CO offset {offset} Hz)")]
    LoopDiverged { t: f64, offset: f64 },

    /// Config file could not be parsed; message carries the location.
    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Shorthand for a [`Error::Config`] with a formatted message.
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
