//! Frequency-stability estimation: Allan deviation from sampled data, Allan
//! deviation from spectral models, the oscillator fractional-frequency PSD,
//! and predicted counter output stability including intermodulation noise.
//!
//! PSD convention: S(ω) is one-sided in the sense that the process variance
//! is (1/2π)·∫₀^∞ S(ω) dω. White frequency noise of level S_y(0) then has
//! Allan variance S_y(0)/(2τ), and a white sampled sequence of per-sample
//! variance σ² at rate r has S(0) = 2σ²/r.

use crate::filters::lowpass1_power_response;
use crate::pipeline::{ConversionPlacement, PipelineConfig, ResamplingMode};
use crate::series::UniformSeries;
use crate::signal::NoiseConfig;
use crate::{Error, Result};

use std::f64::consts::PI;

/// An Allan deviation curve: deviation `sigmas[i]` at averaging time
/// `taus[i]`, estimated from `counts[i]` successive block-average pairs.
/// Curves produced from spectral models carry `counts = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AllanCurve {
    pub taus: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub counts: Vec<u64>,
}

impl AllanCurve {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// Deviation at the grid point nearest `tau`, if one lies within
    /// `rel_tol` of it.
    pub fn lookup(&self, tau: f64, rel_tol: f64) -> Option<(f64, u64)> {
        let mut best: Option<usize> = None;
        for (i, &t) in self.taus.iter().enumerate() {
            let err = (t - tau).abs() / tau;
            if err <= rel_tol && best.is_none_or(|b| err < (self.taus[b] - tau).abs() / tau) {
                best = Some(i);
            }
        }
        best.map(|i| (self.sigmas[i], self.counts[i]))
    }

    /// Log–log least-squares slope over grid points with
    /// `tau_lo <= tau <= tau_hi`.
    pub fn loglog_slope(&self, tau_lo: f64, tau_hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .taus
            .iter()
            .zip(&self.sigmas)
            .filter(|&(&t, &s)| t >= tau_lo && t <= tau_hi && s > 0.0)
            .map(|(&t, &s)| (t.ln(), s.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        Some(sxy / sxx)
    }
}

/// Non-overlapping two-sample (Allan) deviation of fractional-frequency data.
///
/// For each requested τ = m·Δt the series is cut into ⌊N/m⌋ contiguous block
/// averages and σ²_y(τ) = Σ(ȳ_{i+1}−ȳ_i)² / (2·(M−1)) over the M block
/// averages. Each τ must be an integer multiple of the sample interval and
/// leave at least two blocks.
pub fn allan_deviation(series: &UniformSeries, taus: &[f64]) -> Result<AllanCurve> {
    let dt = series.dt();
    let n = series.len();
    let mut curve = AllanCurve { taus: Vec::new(), sigmas: Vec::new(), counts: Vec::new() };
    for &tau in taus {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::config(format!("tau must be positive, got {tau}")));
        }
        let m_f = tau / dt;
        let m = m_f.round();
        if m < 1.0 || (m_f - m).abs() > 1e-6 * m {
            return Err(Error::TauNotMultiple { tau, interval: dt });
        }
        let m = m as usize;
        let blocks = n / m;
        if blocks < 2 {
            return Err(Error::TooShort { needed: 2 * m, got: n });
        }
        let mut prev = f64::NAN;
        let mut acc = 0.0;
        let inv_m = 1.0 / m as f64;
        for b in 0..blocks {
            let mean: f64 = series.values[b * m..(b + 1) * m].iter().sum::<f64>() * inv_m;
            if b > 0 {
                let d = mean - prev;
                acc += d * d;
            }
            prev = mean;
        }
        let pairs = (blocks - 1) as u64;
        let avar = acc / (2.0 * pairs as f64);
        curve.taus.push(m as f64 * dt);
        curve.sigmas.push(avar.sqrt());
        curve.counts.push(pairs);
    }
    Ok(curve)
}

/// A 1–2–5 per decade τ grid for a series of `n` samples at interval `dt`,
/// including only τ that leave at least `min_pairs` block-average pairs.
pub fn decade_taus(dt: f64, n: usize, min_pairs: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut scale: u64 = 1;
    'outer: loop {
        for mult in [1u64, 2, 5] {
            let m = mult.saturating_mul(scale);
            if (m as usize).saturating_mul(min_pairs + 1) > n {
                break 'outer;
            }
            out.push(m as f64 * dt);
        }
        scale = scale.saturating_mul(10);
    }
    out
}

/// Allan deviation predicted from a fractional-frequency PSD model by
/// quadrature of the two-sample variance integral
/// σ²_y(τ) = (1/2π)·(8/τ²)·∫ sin⁴(ωτ/2)/ω² · S_y(ω) dω.
///
/// The integral runs over [2π·10⁻²/τ_max, π·rate]; the band above the cutoff
/// is accounted for analytically by continuing S at its boundary value, so
/// that a white model reproduces S(0)/(2τ) at every τ including τ = 1/rate.
/// In the substituted variable x = ωτ/2 the kernel oscillates with period π;
/// the first 256 periods are resolved directly (Simpson, 64 points per
/// period) and the remainder uses the kernel mean 3/8 on a logarithmic grid.
pub fn allan_from_psd(
    s_y: &dyn Fn(f64) -> f64,
    taus: &[f64],
    rate: f64,
) -> Result<AllanCurve> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::config(format!("rate must be positive, got {rate}")));
    }
    let tau_max = taus.iter().copied().fold(0.0_f64, f64::max);
    if !(tau_max > 0.0) {
        return Err(Error::config("need at least one positive tau"));
    }
    let omega_min = 2.0 * PI * 1e-2 / tau_max;
    let omega_max = PI * rate;
    if omega_min >= omega_max {
        return Err(Error::config("integration band is empty; rate too low for tau grid"));
    }
    let mut curve = AllanCurve { taus: Vec::new(), sigmas: Vec::new(), counts: Vec::new() };
    for &tau in taus {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::config(format!("tau must be positive, got {tau}")));
        }
        let x_min = omega_min * tau / 2.0;
        let x_max = omega_max * tau / 2.0;
        let split = (256.0 * PI).min(x_max);
        // Oscillation-resolved head.
        let g = |x: f64| {
            let s = x.sin();
            s * s * s * s / (x * x) * s_y(2.0 * x / tau)
        };
        let head_steps = ((split - x_min) / (PI / 64.0)).ceil() as usize;
        let mut integral = simpson(&g, x_min, split, head_steps.max(8));
        // Averaged-kernel tail on a log grid.
        if x_max > split {
            let h = |u: f64| {
                let x = u.exp();
                0.375 * s_y(2.0 * x / tau) / x
            };
            let decades = (x_max / split).log10();
            let steps = ((decades * 512.0).ceil() as usize).max(16);
            integral += simpson(&h, split.ln(), x_max.ln(), steps);
        }
        // Out-of-band continuation at the boundary PSD value.
        integral += s_y(omega_max) * tail_kernel(x_max);
        let avar = 2.0 / (PI * tau) * integral;
        curve.taus.push(tau);
        curve.sigmas.push(avar.max(0.0).sqrt());
        curve.counts.push(0);
    }
    Ok(curve)
}

/// ∫ₐ^∞ sin⁴(x)/x² dx: oscillation-resolved over 64 periods, then 3/(8x).
fn tail_kernel(a: f64) -> f64 {
    let b = a + 64.0 * PI;
    let g = |x: f64| {
        let s = x.sin();
        s * s * s * s / (x * x)
    };
    let steps = ((b - a) / (PI / 64.0)).ceil() as usize;
    simpson(&g, a, b, steps) + 0.375 / b
}

/// Composite Simpson rule with `steps` subintervals (rounded up to even).
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = if steps.is_multiple_of(2) { steps } else { steps + 1 }.max(2);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Fractional-frequency PSD model of the self-sustained oscillator.
///
/// S_y(ω) = S_th/(ω₀²·τ_r²)·|H_L(ω)|²·[1 + K²·(1 + ω²τ_r²)]
///
/// The first bracket term is the thermomechanical branch (the sustaining loop
/// cancels the resonator pole, leaving white frequency noise); the second is
/// detection noise, which enters the frequency output through the inverse
/// resonator response and therefore rises as ω² above 1/τ_r — white phase
/// noise. `H_L` is the loop band-pass filter seen by the modulation as an
/// equivalent low-pass (bandwidth/2); `None` models an all-pass loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdModel {
    /// Thermomechanical phase-noise level, rad²/Hz.
    pub s_th: f64,
    /// Detection-to-thermomechanical noise ratio K = sqrt(S_d/S_th).
    pub k_ratio: f64,
    /// Resonator time constant τ_r = 2Q/ω_r, seconds.
    pub tau_r: f64,
    /// Carrier angular frequency ω₀, rad/s.
    pub omega_0: f64,
    /// Equivalent low-pass cutoff of the loop band-pass, Hz.
    pub lowpass_cutoff_hz: Option<f64>,
}

impl PsdModel {
    pub fn from_noise_config(cfg: &NoiseConfig) -> PsdModel {
        PsdModel {
            s_th: cfg.s_th,
            k_ratio: cfg.k_ratio,
            tau_r: cfg.resonator_time_constant(),
            omega_0: 2.0 * PI * cfg.f_o,
            lowpass_cutoff_hz: Some(cfg.bpf_bandwidth / 2.0),
        }
    }

    fn lowpass_power(&self, omega: f64) -> f64 {
        match self.lowpass_cutoff_hz {
            Some(fc) => {
                let r = omega / (2.0 * PI * fc);
                1.0 / (1.0 + r * r)
            }
            None => 1.0,
        }
    }

    /// The two model branches at `omega`, already weighted by 1/ω₀² and
    /// |H_L|²: (thermomechanical, detection).
    pub fn branches(&self, omega: f64) -> (f64, f64) {
        let base = self.s_th / (self.omega_0 * self.omega_0 * self.tau_r * self.tau_r)
            * self.lowpass_power(omega);
        let wt = omega * self.tau_r;
        (base, base * self.k_ratio * self.k_ratio * (1.0 + wt * wt))
    }
}

/// Evaluates the oscillator fractional-frequency PSD at `omega` (rad/s).
pub fn sso_fractional_psd(model: &PsdModel, omega: f64) -> f64 {
    let (th, det) = model.branches(omega);
    th + det
}

/// Predicted Allan deviation of the counter output for a given noise model
/// and processing pipeline.
///
/// The linear part of the output spectrum is the model PSD shaped by the
/// gate average, aliased into the output Nyquist band, and weighted by the
/// pipeline's filter responses. When the reciprocal conversion runs before
/// filtering, the z² term of 1/(1−z) = 1 + z + z² + … mixes the broadband
/// phase noise down to low frequencies; that intermodulation floor is the
/// self-convolution of the (two-sided) z spectrum and is added before the
/// filter responses are applied. With conversion after filtering the z seen
/// by the nonlinearity is already narrow-band and the residual
/// intermodulation is negligible, so no floor term is added.
pub fn predicted_counter_ad(
    model: &PsdModel,
    pipeline: &PipelineConfig,
    f_o: f64,
    taus: &[f64],
) -> Result<AllanCurve> {
    pipeline.validate()?;
    if !(f_o > 0.0) || !f_o.is_finite() {
        return Err(Error::config(format!("f_o must be positive, got {f_o}")));
    }
    // Output data rate and the response shaping z ahead of sampling.
    let (data_rate, pre_shape): (f64, Box<dyn Fn(f64) -> f64>) = match pipeline.resampling {
        ResamplingMode::None => {
            let rate = f_o / pipeline.k as f64;
            let t_gate = 1.0 / rate;
            (rate, Box::new(move |omega: f64| sinc_sq(omega * t_gate / 2.0)))
        }
        ResamplingMode::Cic => {
            let cic = pipeline.cic.as_ref().expect("validated");
            let rate = cic.output_rate();
            let t_r = 1.0 / rate;
            let rn = (cic.decimation * cic.comb_delay) as f64;
            let f_clk = cic.f_clk;
            (
                rate,
                Box::new(move |omega: f64| {
                    let f = omega / (2.0 * PI);
                    let a = cic_amplitude(f, f_clk, rn);
                    // second-order CIC power × conversion differencing
                    a * a * sinc_sq(omega * t_r / 2.0)
                }),
            )
        }
        ResamplingMode::EventTriggered => {
            return Err(Error::config(
                "no spectral prediction for event-triggered resampling",
            ));
        }
    };
    let nyq = PI * data_rate;
    let model = *model;
    // Aliased z spectrum on the output grid.
    let s_z = move |omega: f64| -> f64 {
        let mut acc = 0.0;
        for j in -4i32..=4 {
            let w = (omega + j as f64 * 2.0 * nyq).abs();
            if w > 0.0 {
                acc += sso_fractional_psd(&model, w) * pre_shape(w);
            }
        }
        acc
    };
    // Post-conversion filter responses at the data rate.
    let lpf = pipeline.lpf_cutoff_hz;
    let mavg = pipeline.mavg_window;
    let post = move |omega: f64| -> f64 {
        let f = omega / (2.0 * PI);
        let mut p = 1.0;
        if let Some(fc) = lpf {
            p *= lowpass1_power_response(fc, data_rate, f);
        }
        if let Some(w) = mavg {
            p *= mavg_power(f, data_rate, w);
        }
        p
    };
    let total: Box<dyn Fn(f64) -> f64> = match pipeline.conversion {
        ConversionPlacement::BeforeFilter => {
            let im = IntermodTable::build(&s_z, data_rate);
            Box::new(move |omega: f64| (s_z(omega) + im.lookup(omega)) * post(omega))
        }
        ConversionPlacement::AfterFilter => Box::new(move |omega: f64| s_z(omega) * post(omega)),
    };
    allan_from_psd(&*total, taus, data_rate)
}

fn sinc_sq(x: f64) -> f64 {
    if x.abs() < 1e-9 {
        1.0
    } else {
        let s = x.sin() / x;
        s * s
    }
}

/// Second-order CIC amplitude response |sin(πfRN/f_clk)/(RN·sin(πf/f_clk))|²,
/// normalized to 1 at DC.
fn cic_amplitude(f: f64, f_clk: f64, rn: f64) -> f64 {
    let x = PI * f / f_clk;
    if x.abs() < 1e-12 {
        return 1.0;
    }
    let ratio = (x * rn).sin() / (rn * x.sin());
    ratio * ratio
}

/// Power response of a length-`w` moving average at sample rate `rate`.
fn mavg_power(f: f64, rate: f64, w: usize) -> f64 {
    let theta = PI * f / rate;
    if theta.abs() < 1e-12 {
        return 1.0;
    }
    let wf = w as f64;
    let a = (wf * theta).sin() / (wf * theta.sin());
    a * a
}

/// Tabulated intermodulation spectrum: the PSD of z² − E[z²] for Gaussian z,
/// i.e. twice the circular self-convolution of the two-sided z spectrum over
/// the sampled band.
struct IntermodTable {
    df: f64,
    f_nyq: f64,
    /// One-sided values on bin centers (i + 0.5)·df.
    values: Vec<f64>,
}

impl IntermodTable {
    fn build(s_z: &dyn Fn(f64) -> f64, rate: f64) -> IntermodTable {
        const M: usize = 2048;
        let f_nyq = rate / 2.0;
        let df = f_nyq / M as f64;
        // Two-sided spectrum on 2M circular bins; p[i] at f = −f_nyq + (i+0.5)·df.
        let mut p = vec![0.0_f64; 2 * M];
        for (i, v) in p.iter_mut().enumerate() {
            let f = -f_nyq + (i as f64 + 0.5) * df;
            *v = s_z(2.0 * PI * f.abs()) / 2.0;
        }
        let mut values = vec![0.0_f64; M];
        for (j, out) in values.iter_mut().enumerate() {
            // Output bin at f = (j + 0.5)·df  ->  circular index offset.
            let jj = M + j; // index of (j+0.5)·df in the two-sided grid
            let mut acc = 0.0;
            for (i, &pi) in p.iter().enumerate() {
                let k = (jj + 2 * M - i) % (2 * M);
                acc += pi * p[k];
            }
            // two-sided conv × df, Gaussian factor 2, one-sided factor 2
            *out = 4.0 * acc * df;
        }
        IntermodTable { df, f_nyq, values }
    }

    fn lookup(&self, omega: f64) -> f64 {
        let f = (omega / (2.0 * PI)).abs();
        if f >= self.f_nyq {
            return *self.values.last().unwrap();
        }
        let pos = (f / self.df - 0.5).max(0.0);
        let i = pos.floor() as usize;
        if i + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        let frac = pos - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}
