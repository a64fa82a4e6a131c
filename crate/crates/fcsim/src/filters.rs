//! Post-processing filters: first-order IIR low-pass, moving average, and
//! downsampling. All filters run at the native rate of the stream they are
//! applied to; validation against that rate happens at call time.

use serde::{Deserialize, Serialize};

use crate::series::UniformSeries;
use crate::{Error, Result};

/// Declarative filter description used in pipeline configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterSpec {
    /// First-order Butterworth low-pass, bilinear transform with the cutoff
    /// prewarped so the −3 dB point lands exactly on `cutoff_hz`.
    Lowpass1 { cutoff_hz: f64 },
    /// Boxcar average over `window` consecutive samples.
    MovingAverage { window: usize },
    /// Front-end band-pass model (center/bandwidth). This shapes the noise
    /// model of the source; it is not applied to sampled streams directly.
    Bandpass { center_hz: f64, bandwidth_hz: f64 },
}

impl FilterSpec {
    /// Applies the filter to a uniformly sampled stream.
    pub fn apply(&self, series: &UniformSeries) -> Result<UniformSeries> {
        match *self {
            FilterSpec::Lowpass1 { cutoff_hz } => lowpass1(series, cutoff_hz),
            FilterSpec::MovingAverage { window } => moving_average(series, window),
            FilterSpec::Bandpass { .. } => Err(Error::config(
                "bandpass is a front-end noise model, not a stream operation",
            )),
        }
    }

    /// The equivalent low-pass cutoff seen by phase noise: a band-pass of
    /// bandwidth B centered on the carrier acts on the modulation as a
    /// low-pass of bandwidth B/2.
    pub fn equivalent_lowpass_cutoff(&self) -> Option<f64> {
        match *self {
            FilterSpec::Lowpass1 { cutoff_hz } => Some(cutoff_hz),
            FilterSpec::Bandpass { bandwidth_hz, .. } => Some(bandwidth_hz / 2.0),
            FilterSpec::MovingAverage { .. } => None,
        }
    }
}

/// First-order low-pass coefficients for sampling rate `rate`, designed by
/// bilinear transform with the analog prototype prewarped at the cutoff.
/// Returns `(b0, b1, a1)` for `y[n] = b0·x[n] + b1·x[n−1] − a1·y[n−1]`.
pub(crate) fn lowpass1_coeffs(cutoff_hz: f64, rate: f64) -> Result<(f64, f64, f64)> {
    if !(cutoff_hz > 0.0) || !cutoff_hz.is_finite() {
        return Err(Error::config(format!("cutoff must be positive, got {cutoff_hz}")));
    }
    if cutoff_hz >= rate / 2.0 {
        return Err(Error::config(format!(
            "cutoff {cutoff_hz} Hz must lie below the Nyquist rate {} Hz",
            rate / 2.0
        )));
    }
    let c = (std::f64::consts::PI * cutoff_hz / rate).tan();
    let b = c / (1.0 + c);
    let a1 = (c - 1.0) / (c + 1.0);
    Ok((b, b, a1))
}

/// First-order Butterworth low-pass (DC gain exactly 1, −3 dB at `cutoff_hz`).
///
/// The state is primed with the first sample so a constant input passes
/// through unchanged from sample 0; ramp-like inputs still need a settle of a
/// few time constants before the steady-state lag is reached.
pub fn lowpass1(series: &UniformSeries, cutoff_hz: f64) -> Result<UniformSeries> {
    let values = lowpass1_values(&series.values, series.rate, cutoff_hz)?;
    Ok(UniformSeries { rate: series.rate, t0: series.t0, values })
}

/// Slice-level variant of [`lowpass1`].
pub fn lowpass1_values(values: &[f64], rate: f64, cutoff_hz: f64) -> Result<Vec<f64>> {
    let (b0, b1, a1) = lowpass1_coeffs(cutoff_hz, rate)?;
    let mut out = Vec::with_capacity(values.len());
    let Some(&first) = values.first() else {
        return Ok(out);
    };
    let mut x_prev = first;
    let mut y_prev = first;
    for &x in values {
        let y = b0 * x + b1 * x_prev - a1 * y_prev;
        out.push(y);
        x_prev = x;
        y_prev = y;
    }
    Ok(out)
}

/// Squared magnitude of the realized (digital) first-order low-pass at
/// frequency `f_hz`. Exactly 1/2 at the cutoff by construction.
pub fn lowpass1_power_response(cutoff_hz: f64, rate: f64, f_hz: f64) -> f64 {
    let (b0, _, a1) = match lowpass1_coeffs(cutoff_hz, rate) {
        Ok(c) => c,
        Err(_) => return f64::NAN,
    };
    let theta = 2.0 * std::f64::consts::PI * f_hz / rate;
    let num = b0 * b0 * 2.0 * (1.0 + theta.cos());
    let den = 1.0 + 2.0 * a1 * theta.cos() + a1 * a1;
    num / den
}

/// Boxcar average over `window` samples, emitting from input index
/// `window − 1` (each output is the mean of the window ending at it).
pub fn moving_average(series: &UniformSeries, window: usize) -> Result<UniformSeries> {
    if window == 0 {
        return Err(Error::config("moving average window must be >= 1"));
    }
    if series.len() < window {
        return Err(Error::TooShort { needed: window, got: series.len() });
    }
    let n_out = series.len() - window + 1;
    let mut values = Vec::with_capacity(n_out);
    let inv = 1.0 / window as f64;
    // Direct per-window summation: error stays at a few ulps per output and
    // never accumulates across the stream, which the gate-emulation
    // equivalence checks rely on.
    for i in 0..n_out {
        let sum: f64 = series.values[i..i + window].iter().sum();
        values.push(sum * inv);
    }
    Ok(UniformSeries {
        rate: series.rate,
        t0: series.t0 + (window - 1) as f64 / series.rate,
        values,
    })
}

/// Keeps samples `offset, offset + ratio, offset + 2·ratio, …`, dividing the
/// rate by `ratio`.
pub fn downsample(series: &UniformSeries, ratio: usize, offset: usize) -> Result<UniformSeries> {
    if ratio == 0 {
        return Err(Error::config("downsample ratio must be >= 1"));
    }
    if offset >= series.len() {
        return Err(Error::TooShort { needed: offset + 1, got: series.len() });
    }
    let values: Vec<f64> = series.values[offset..].iter().copied().step_by(ratio).collect();
    Ok(UniformSeries {
        rate: series.rate / ratio as f64,
        t0: series.t0 + offset as f64 / series.rate,
        values,
    })
}

/// Least-squares amplitude of a tone of known frequency in `values`: fits
/// offset + a·sin + b·cos by the 3×3 normal equations, so the result is
/// independent of the tone's phase and of any DC component (which would
/// otherwise leak into the estimate over a non-integer number of periods).
/// Used to measure filter gains without windowing error.
pub fn tone_amplitude(values: &[f64], rate: f64, f: f64) -> f64 {
    let n = values.len() as f64;
    let (mut sum_v, mut vs, mut vc) = (0.0, 0.0, 0.0);
    let (mut s1, mut c1, mut ss, mut cc, mut sc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &v) in values.iter().enumerate() {
        let ph = 2.0 * std::f64::consts::PI * f * i as f64 / rate;
        let (s, c) = ph.sin_cos();
        sum_v += v;
        vs += v * s;
        vc += v * c;
        s1 += s;
        c1 += c;
        ss += s * s;
        cc += c * c;
        sc += s * c;
    }
    // Solve [n s1 c1; s1 ss sc; c1 sc cc]·[d a b]ᵀ = [sum_v vs vc]ᵀ.
    let det = n * (ss * cc - sc * sc) - s1 * (s1 * cc - sc * c1) + c1 * (s1 * sc - ss * c1);
    let a = (sum_v * (sc * c1 - s1 * cc) + vs * (n * cc - c1 * c1)
        + vc * (s1 * c1 - n * sc))
        / det;
    let b = (sum_v * (s1 * sc - ss * c1) + vs * (s1 * c1 - n * sc)
        + vc * (n * ss - s1 * s1))
        / det;
    (a * a + b * b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(rate: f64, values: Vec<f64>) -> UniformSeries {
        UniformSeries::new(rate, 0.0, values).unwrap()
    }

    #[test]
    fn lowpass_passes_constant_unchanged() {
        let s = series(1000.0, vec![5.0; 64]);
        let f = lowpass1(&s, 100.0).unwrap();
        for &v in &f.values {
            assert!((v - 5.0).abs() < 1e-12, "constant distorted to {v}");
        }
    }

    #[test]
    fn lowpass_rejects_bad_cutoffs() {
        let s = series(1000.0, vec![0.0; 8]);
        assert!(lowpass1(&s, 0.0).is_err());
        assert!(lowpass1(&s, 500.0).is_err());
        assert!(lowpass1(&s, 800.0).is_err());
    }

    #[test]
    fn lowpass_gain_at_cutoff_is_3db() {
        let rate = 10_000.0;
        let fc = 500.0;
        let n = 40_000;
        let x: Vec<f64> =
            (0..n).map(|i| (2.0 * std::f64::consts::PI * fc * i as f64 / rate).sin()).collect();
        let y = lowpass1_values(&x, rate, fc).unwrap();
        // Skip the transient before measuring.
        let amp = tone_amplitude(&y[2000..], rate, fc);
        assert!(
            (amp - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01,
            "gain at cutoff {amp}, expected 0.7071"
        );
    }

    #[test]
    fn lowpass_attenuates_decade_above_cutoff_by_20db() {
        let rate = 48_000.0;
        let fc = 200.0;
        let f = 2000.0;
        let n = 96_000;
        let x: Vec<f64> =
            (0..n).map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / rate).sin()).collect();
        let y = lowpass1_values(&x, rate, fc).unwrap();
        let amp = tone_amplitude(&y[4000..], rate, f);
        let db = 20.0 * amp.log10();
        assert!((db + 20.0).abs() < 1.0, "attenuation {db:.2} dB, expected -20 dB");
    }

    #[test]
    fn lowpass_power_response_is_half_at_cutoff() {
        for (fc, rate) in [(200.0, 9389.6484375), (1000.0, 27_000.0), (500.0, 119_000.0)] {
            let p = lowpass1_power_response(fc, rate, fc);
            assert!((p - 0.5).abs() < 1e-12, "|H({fc})|^2 = {p}");
        }
    }

    #[test]
    fn moving_average_window_one_is_identity() {
        let s = series(10.0, vec![3.0, 1.0, 4.0, 1.0, 5.0]);
        let m = moving_average(&s, 1).unwrap();
        assert_eq!(m.values, s.values);
        assert_eq!(m.t0, s.t0);
    }

    #[test]
    fn moving_average_window_two() {
        let s = series(10.0, vec![1.0, 2.0, 3.0, 4.0]);
        let m = moving_average(&s, 2).unwrap();
        assert_eq!(m.values, vec![1.5, 2.5, 3.5]);
        // Output is aligned with the end of each window.
        assert!((m.t0 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn moving_average_needs_full_window() {
        let s = series(10.0, vec![1.0, 2.0]);
        assert!(matches!(moving_average(&s, 3), Err(Error::TooShort { .. })));
        assert!(moving_average(&s, 0).is_err());
    }

    #[test]
    fn downsample_strides_and_offsets() {
        let s = series(30.0, (0..10).map(|i| i as f64).collect());
        let d = downsample(&s, 3, 0).unwrap();
        assert_eq!(d.values, vec![0.0, 3.0, 6.0, 9.0]);
        assert_eq!(d.rate, 10.0);
        let d1 = downsample(&s, 3, 1).unwrap();
        assert_eq!(d1.values, vec![1.0, 4.0, 7.0]);
        assert!((d1.t0 - 1.0 / 30.0).abs() < 1e-15);
        assert!(downsample(&s, 0, 0).is_err());
        assert!(downsample(&s, 3, 10).is_err());
    }

    #[test]
    fn bandpass_spec_maps_to_equivalent_lowpass() {
        let spec = FilterSpec::Bandpass { center_hz: 119_000.0, bandwidth_hz: 5000.0 };
        assert_eq!(spec.equivalent_lowpass_cutoff(), Some(2500.0));
        let s = series(1000.0, vec![0.0; 4]);
        assert!(spec.apply(&s).is_err(), "bandpass must not apply to streams");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn lowpass_is_linear(
                xs in proptest::collection::vec(-1e3f64..1e3, 4..64),
                ys_seed in proptest::collection::vec(-1e3f64..1e3, 4..64),
                a in -10.0f64..10.0,
                b in -10.0f64..10.0,
            ) {
                let n = xs.len().min(ys_seed.len());
                let xs = &xs[..n];
                let ys = &ys_seed[..n];
                let combo: Vec<f64> =
                    xs.iter().zip(ys).map(|(&x, &y)| a * x + b * y).collect();
                let rate = 1000.0;
                let fx = lowpass1_values(xs, rate, 100.0).unwrap();
                let fy = lowpass1_values(ys, rate, 100.0).unwrap();
                let fc = lowpass1_values(&combo, rate, 100.0).unwrap();
                for i in 0..n {
                    let expect = a * fx[i] + b * fy[i];
                    prop_assert!(
                        (fc[i] - expect).abs() <= 1e-9 * (1.0 + expect.abs()),
                        "nonlinear at {}: {} vs {}", i, fc[i], expect
                    );
                }
            }

            #[test]
            fn moving_average_commutes_with_scaling(
                xs in proptest::collection::vec(-1e3f64..1e3, 8..64),
                scale in -10.0f64..10.0,
                window in 1usize..8,
            ) {
                let s = series(100.0, xs.clone());
                let scaled = series(100.0, xs.iter().map(|&x| x * scale).collect());
                let m1 = moving_average(&scaled, window).unwrap();
                let m2 = moving_average(&s, window).unwrap();
                for (a, b) in m1.values.iter().zip(&m2.values) {
                    prop_assert!((a - b * scale).abs() <= 1e-9 * (1.0 + a.abs()));
                }
            }
        }
    }
}
