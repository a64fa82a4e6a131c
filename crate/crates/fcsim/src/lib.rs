//! Simulation of a self-sustaining micromechanical oscillator read out by an
//! interpolating reciprocal frequency counter.
//!
//! The crate is organised around the signal chain of such an instrument:
//!
//! * [`signal`] — synthesizes oscillator phase trajectories with
//!   thermomechanical and detection noise shaped by the sustaining loop, and
//!   extracts rising-edge timestamps from them.
//! * [`counter`] — the counter core: gate division, interpolator quantization,
//!   and conversion of timestamps to frequency (exact reciprocal and the
//!   linearized ideal variant used for analysis).
//! * [`resample`] — zero-order hold to the reference clock grid, a
//!   second-order CIC decimator, and event-triggered resampling, which move
//!   the input-rate stamp stream onto a fixed output rate.
//! * [`filters`] — the small set of post-processing filters: first-order IIR
//!   low-pass, moving average, and plain downsampling.
//! * [`stability`] — Allan deviation from sample streams and from spectral
//!   models, the oscillator fractional-frequency PSD, and predicted counter
//!   stability curves including intermodulation effects.
//! * [`pll`] — a baseband phase-locked-loop frequency detector used as the
//!   comparison instrument.
//! * [`harness`] — canned experiments reproducing the precision/speed
//!   trade-off studies, with CSV/metadata export and a CLI on top.
//!
//! Conventions used throughout: frequencies in Hz, angular frequencies in
//! rad/s, times in seconds, phase in cycles unless stated otherwise.
//! Spectral densities S(ω) are normalized so that the variance of a process
//! equals (1/2π)·∫₀^∞ S(ω) dω; with this convention white frequency noise of
//! level S_y(0) gives an Allan variance of S_y(0)/(2τ).

// Validation guards are written `!(x > 0.0)` so that NaN is rejected along
// with non-positive values; the negation is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counter;
pub mod error;
pub mod filters;
pub mod harness;
pub mod pipeline;
pub mod pll;
pub mod resample;
pub mod series;
pub mod signal;
pub mod stability;

pub use error::{Error, Result};
