//! Counter core: timestamp bookkeeping, gate division, interpolator
//! quantization and timestamp-to-frequency conversion.
//!
//! The counter stamps every k-th rising edge of the input against its
//! reference clock, so a stamp stream is fully described by the stamp times
//! plus the gate factor k (input cycles per stamp step). Stamp `i` of an
//! undivided, unsliced series corresponds to input cycle `i·k`; all
//! conversions below only ever use cycle *differences*, so an unknown cycle
//! offset of the first stamp cancels out.

use crate::{Error, Result};
use crate::series::UniformSeries;

/// Reference clock / interpolator grid metadata attached to quantized stamps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    /// Reference clock frequency in Hz.
    pub f_clk: f64,
    /// Interpolator resolution in seconds (the time grid pitch).
    pub interp_res: f64,
}

/// A strictly increasing sequence of rising-edge timestamps.
#[derive(Debug, Clone)]
pub struct TimestampSeries {
    /// Stamp times in seconds.
    pub times: Vec<f64>,
    /// Gate factor: input cycles between consecutive stamps.
    pub k: u64,
    /// Present once the stamps have been quantized to the interpolator grid.
    pub grid: Option<TimeGrid>,
}

/// Frequency estimates produced from a stamp stream.
///
/// `values[i]` is the estimate formed at `times[i]`, in Hz. `gate_cycles` is
/// the number of input cycles spanned by each estimate.
#[derive(Debug, Clone)]
pub struct FrequencySeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub gate_cycles: u64,
}

impl TimestampSeries {
    pub fn new(times: Vec<f64>, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("gate factor k must be >= 1"));
        }
        for i in 1..times.len() {
            if !(times[i] > times[i - 1]) {
                return Err(Error::NonMonotonicTimes { index: i });
            }
        }
        Ok(TimestampSeries { times, k, grid: None })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Average stamp rate over the series, in Hz.
    pub fn mean_rate(&self) -> f64 {
        if self.times.len() < 2 {
            return f64::NAN;
        }
        (self.times.len() - 1) as f64 / (self.times[self.times.len() - 1] - self.times[0])
    }

    /// Keeps every `k`-th stamp, emulating a hardware divider on the input:
    /// the resulting series has gate factor `k · self.k`.
    pub fn divide(&self, k: u64) -> Result<TimestampSeries> {
        if k == 0 {
            return Err(Error::config("divide factor must be >= 1"));
        }
        let times: Vec<f64> = self.times.iter().copied().step_by(k as usize).collect();
        Ok(TimestampSeries { times, k: self.k * k, grid: self.grid })
    }

    /// Rounds each stamp to the interpolator grid (multiples of
    /// `interp_res`). Ties after rounding are resolved by pushing the later
    /// stamp up one grid step; if that would move a stamp more than one step
    /// past its rounded position the stream is denser than the interpolator
    /// can represent and the call fails.
    pub fn quantize(&self, f_clk: f64, interp_res: f64) -> Result<TimestampSeries> {
        if !(f_clk > 0.0) || !f_clk.is_finite() {
            return Err(Error::config(format!("f_clk must be positive, got {f_clk}")));
        }
        if !(interp_res > 0.0) || !interp_res.is_finite() {
            return Err(Error::config(format!("interp_res must be positive, got {interp_res}")));
        }
        if interp_res > 1.0 / f_clk * (1.0 + 1e-9) {
            return Err(Error::config(format!(
                "interp_res {interp_res} s is coarser than one clock period {} s",
                1.0 / f_clk
            )));
        }
        let mut out = Vec::with_capacity(self.times.len());
        let mut prev_steps: i64 = i64::MIN;
        for (i, &t) in self.times.iter().enumerate() {
            let rounded = (t / interp_res).round() as i64;
            let mut steps = rounded;
            if steps <= prev_steps {
                steps = prev_steps + 1;
                if steps - rounded > 1 {
                    return Err(Error::QuantizeCollision { index: i });
                }
            }
            prev_steps = steps;
            out.push(steps as f64 * interp_res);
        }
        Ok(TimestampSeries {
            times: out,
            k: self.k,
            grid: Some(TimeGrid { f_clk, interp_res }),
        })
    }

    /// Reciprocal conversion: the estimate at stamp `n` is the gate length in
    /// cycles divided by the elapsed time, `k·self.k / (t_n − t_{n−k})`.
    /// One estimate per retained stamp from index `k` on.
    pub fn to_frequency_reciprocal(&self, k: usize) -> Result<FrequencySeries> {
        self.convert(k, None)
    }

    /// Linearized conversion used for analysis: with `z` the fractional gate
    /// shortfall of the reciprocal estimate (`f_rec = f_o/(1−z)`), emits
    /// `f_o·(1+z)` — the first-order expansion free of intermodulation
    /// products. Needs the nominal input frequency, which a real counter does
    /// not know; that is what makes this variant "ideal".
    pub fn to_frequency_ideal(&self, k: usize, f_o: f64) -> Result<FrequencySeries> {
        if !(f_o > 0.0) || !f_o.is_finite() {
            return Err(Error::config(format!("f_o must be positive, got {f_o}")));
        }
        self.convert(k, Some(f_o))
    }

    fn convert(&self, k: usize, ideal_f_o: Option<f64>) -> Result<FrequencySeries> {
        if k == 0 {
            return Err(Error::config("conversion gate must span >= 1 stamp"));
        }
        if self.times.len() < k + 1 {
            return Err(Error::TooShort { needed: k + 1, got: self.times.len() });
        }
        let gate_cycles = self.k * k as u64;
        let gc = gate_cycles as f64;
        let mut times = Vec::with_capacity(self.times.len() - k);
        let mut values = Vec::with_capacity(self.times.len() - k);
        for n in k..self.times.len() {
            let dt = self.times[n] - self.times[n - k];
            if !(dt > 0.0) {
                return Err(Error::NonMonotonicTimes { index: n });
            }
            let v = match ideal_f_o {
                // k·T_o − dt is the accumulated phase-time deviation over the
                // gate; dividing by the gate duration gives z.
                Some(f_o) => {
                    let z = 1.0 - dt * f_o / gc;
                    f_o * (1.0 + z)
                }
                None => gc / dt,
            };
            times.push(self.times[n]);
            values.push(v);
        }
        Ok(FrequencySeries { times, values, gate_cycles })
    }

    /// Per-stamp intervals `t_i − t_{i−1}` (the period data the moving-average
    /// gate emulation operates on).
    pub fn periods(&self) -> Result<Vec<f64>> {
        if self.times.len() < 2 {
            return Err(Error::TooShort { needed: 2, got: self.times.len() });
        }
        Ok(self.times.windows(2).map(|w| w[1] - w[0]).collect())
    }
}

impl FrequencySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Treats the estimates as uniformly sampled at `rate` (the nominal stamp
    /// rate), which is how counter output is consumed by the stability
    /// estimators in practice.
    pub fn to_uniform(&self, rate: f64) -> Result<UniformSeries> {
        let t0 = self.times.first().copied().unwrap_or(0.0);
        UniformSeries::new(rate, t0, self.values.clone())
    }

    /// Fractional frequency relative to `f_o`.
    pub fn fractional(&self, f_o: f64) -> Vec<f64> {
        self.values.iter().map(|&v| v / f_o).collect()
    }
}
