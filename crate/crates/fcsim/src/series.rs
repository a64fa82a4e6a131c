//! Uniformly sampled data, the common currency between resampler, filters and
//! the stability estimators.

use crate::{Error, Result};

/// A uniformly sampled real-valued stream.
///
/// `t0` is the absolute time of `values[0]`; sample `i` sits at
/// `t0 + i / rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSeries {
    pub rate: f64,
    pub t0: f64,
    pub values: Vec<f64>,
}

impl UniformSeries {
    pub fn new(rate: f64, t0: f64, values: Vec<f64>) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::config(format!("sample rate must be positive, got {rate}")));
        }
        Ok(UniformSeries { rate, t0, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample interval in seconds.
    pub fn dt(&self) -> f64 {
        1.0 / self.rate
    }

    /// Time of sample `i`.
    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.rate
    }

    /// Drops the first `n` samples (filter settle, CIC fill, ...), shifting
    /// `t0` accordingly. Dropping more than the length empties the series.
    pub fn drop_front(&mut self, n: usize) {
        let n = n.min(self.values.len());
        self.values.drain(..n);
        self.t0 += n as f64 / self.rate;
    }

    /// Same stream with every value mapped through `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> UniformSeries {
        UniformSeries {
            rate: self.rate,
            t0: self.t0,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}
