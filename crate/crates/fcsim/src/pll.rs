//! Behavioral lock-in PLL frequency detector, modeled in baseband: phase
//! detector (difference in degrees) → first-order demodulation low-pass →
//! PI controller → controlled-oscillator frequency, which integrates back
//! into the loop. The controller integrator is preloaded with the input's
//! initial rate so tracking starts near lock, as a lock-in instrument is
//! operated.

use crate::counter::FrequencySeries;
use crate::filters::lowpass1_coeffs;
use crate::series::UniformSeries;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PllConfig {
    /// Proportional gain, Hz per degree of phase error.
    pub kp: f64,
    /// Integral gain, Hz per degree per second.
    pub ki: f64,
    /// Demodulation low-pass cutoff, Hz.
    pub demod_cutoff: f64,
    /// Loop update rate, Hz.
    pub rate: f64,
    /// Design closed-loop bandwidth, Hz (documentation and reporting only;
    /// the realized bandwidth follows from kp/ki/demod_cutoff).
    pub target_bw: f64,
}

impl Default for PllConfig {
    fn default() -> PllConfig {
        PllConfig { kp: 2.92, ki: 13.34, demod_cutoff: 1000.0, rate: 27_000.0, target_bw: 200.0 }
    }
}

impl PllConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kp", self.kp),
            ("ki", self.ki),
            ("demod_cutoff", self.demod_cutoff),
            ("rate", self.rate),
            ("target_bw", self.target_bw),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.rate <= 2.0 * self.demod_cutoff {
            return Err(Error::config(format!(
                "loop rate {} must exceed twice the demod cutoff {}",
                self.rate, self.demod_cutoff
            )));
        }
        Ok(())
    }
}

/// Tracks an input phase stream (cycles, sampled at `cfg.rate`) and returns
/// the controlled-oscillator frequency stream.
///
/// Divergence — the CO frequency leaving ±half the preloaded rate — aborts
/// with the time and offset at which the loop ran away.
pub fn pll_track(phase: &UniformSeries, cfg: &PllConfig) -> Result<FrequencySeries> {
    cfg.validate()?;
    if (phase.rate - cfg.rate).abs() > 1e-9 * cfg.rate {
        return Err(Error::config(format!(
            "input sampled at {} Hz but the loop runs at {} Hz",
            phase.rate, cfg.rate
        )));
    }
    let n = phase.len();
    if n < 16 {
        return Err(Error::TooShort { needed: 16, got: n });
    }
    let dt = 1.0 / cfg.rate;
    // Preload: mean rate over the first 10 ms (or the whole stream if
    // shorter) seeds the integrator and phase so the loop starts locked.
    let j1 = ((0.01 * cfg.rate).round() as usize).clamp(1, n - 1);
    let f_init = (phase.values[j1] - phase.values[0]) / (j1 as f64 * dt);
    let (b0, b1, a1) = lowpass1_coeffs(cfg.demod_cutoff, cfg.rate)?;

    let mut phi_co = phase.values[0];
    let mut demod = 0.0_f64;
    let mut e_prev = 0.0_f64;
    let mut integ = f_init;
    let mut out_times = Vec::with_capacity(n);
    let mut out_values = Vec::with_capacity(n);
    for (j, &phi_in) in phase.values.iter().enumerate() {
        let e_deg = 360.0 * (phi_in - phi_co);
        demod = if j == 0 {
            // Prime the filter so a clean start does not ring.
            e_deg
        } else {
            b0 * e_deg + b1 * e_prev - a1 * demod
        };
        e_prev = e_deg;
        integ += cfg.ki * demod * dt;
        let f_co = cfg.kp * demod + integ;
        let t = phase.t0 + j as f64 * dt;
        let offset = f_co - f_init;
        if !f_co.is_finite() || offset.abs() > 0.5 * f_init.abs().max(1.0) {
            return Err(Error::LoopDiverged { t, offset });
        }
        out_times.push(t);
        out_values.push(f_co);
        phi_co += f_co * dt;
    }
    Ok(FrequencySeries { times: out_times, values: out_values, gate_cycles: 0 })
}
