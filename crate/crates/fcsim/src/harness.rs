//! Experiment harness: named end-to-end measurement scenarios, the pipeline
//! executor that turns a stamp stream into uniformly sampled fractional
//! frequency, and deterministic export of the resulting stability curves.
//!
//! Each experiment synthesizes one oscillator realization and feeds it
//! through several processing legs, mirroring how a single hardware capture
//! is post-processed multiple ways for comparison. All legs of an experiment
//! therefore share a seed; distinct experiments draw distinct realizations
//! derived from the master seed, so adding an experiment never perturbs the
//! data of another.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::counter::TimestampSeries;
use crate::filters::{downsample, lowpass1, moving_average};
use crate::pipeline::{ConversionPlacement, PipelineConfig, ResamplingMode};
use crate::pll::{pll_track, PllConfig};
use crate::resample::{cic_stamp_pairs, convert_pairs, event_triggered_resample, CicConfig};
use crate::series::UniformSeries;
use crate::signal::{synthesize_decimated_alpha, synthesize_timestamps, NoiseConfig};
use crate::stability::{
    allan_deviation, allan_from_psd, decade_taus, predicted_counter_ad, sso_fractional_psd,
    AllanCurve, PsdModel,
};
use crate::{Error, Result};

/// Minimum number of Allan pairs required before a tau makes it onto the
/// default decade grid.
pub const MIN_TAU_PAIRS: usize = 8;

/// Reference clock and interpolator of the virtual counter front-end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizeConfig {
    /// Counter reference clock in Hz.
    pub f_clk: f64,
    /// Interpolator steps per clock period; the time grid pitch is
    /// `1/(f_clk·interp_steps)`.
    pub interp_steps: u32,
}

impl Default for QuantizeConfig {
    fn default() -> Self {
        // 76.92 MHz reference with a 130-step interpolator: ~100 ps pitch.
        QuantizeConfig { f_clk: 76.92e6, interp_steps: 130 }
    }
}

impl QuantizeConfig {
    pub fn interp_res(&self) -> f64 {
        1.0 / (self.f_clk * self.interp_steps as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_clk > 0.0) || !self.f_clk.is_finite() {
            return Err(Error::config(format!("f_clk must be positive, got {}", self.f_clk)));
        }
        if self.interp_steps == 0 {
            return Err(Error::config("interp_steps must be at least 1"));
        }
        Ok(())
    }
}

/// Full parameterization of a harness run. Everything an experiment needs is
/// in here (plus the experiment name), so a run is reproducible from the
/// exported metadata alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; per-experiment seeds are derived from it.
    pub seed: u64,
    /// Measurement duration per experiment, seconds.
    pub duration_s: f64,
    /// Oscillator model for every experiment except filter-placement.
    pub noise: NoiseConfig,
    /// Oscillator model for the filter-placement experiment, which needs a
    /// much stronger detection-noise floor for the placement contrast to
    /// stand out of the measurement bandwidth.
    pub filter_placement_noise: NoiseConfig,
    /// Counter front-end clock/interpolator.
    pub quantize: QuantizeConfig,
    /// Decimator used by the resampling legs.
    pub cic: CicConfig,
    /// Corner of the single-pole output low-pass, Hz.
    pub lpf_cutoff_hz: f64,
    /// Moving-average length for the gate-emulation experiment.
    pub mavg_window: usize,
    /// Gate factors swept by the gate-sweep experiment.
    pub gate_sweep_k: Vec<u64>,
    /// Trigger interval of the event-triggered resampler, seconds.
    pub t_int_s: f64,
    /// Demodulating PLL under comparison. `rate` is a target; the harness
    /// snaps it to an integer decimation of the synthesis rate.
    pub pll: PllConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0x5eed,
            duration_s: 10.0,
            noise: NoiseConfig::default(),
            // High-Q device drowned in detection noise: the slow resonator
            // keeps the intrinsic frequency-noise floor far below the
            // detection phase noise, which is what makes the low-pass
            // placement visible over several decades of tau.
            filter_placement_noise: NoiseConfig {
                q: 57.5e3,
                s_th: 4.41e-11,
                k_ratio: 100.0,
                bpf_bandwidth: 20e3,
                ..NoiseConfig::default()
            },
            quantize: QuantizeConfig::default(),
            cic: CicConfig::default(),
            lpf_cutoff_hz: 200.0,
            mavg_window: 121,
            gate_sweep_k: vec![1, 11, 121],
            t_int_s: 1e-4,
            pll: PllConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| io_with_path(path, e))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::ConfigParse(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::config(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            )));
        }
        self.noise.validate()?;
        self.filter_placement_noise.validate()?;
        self.quantize.validate()?;
        self.cic.validate()?;
        self.pll.validate()?;
        if !(self.lpf_cutoff_hz > 0.0) || !self.lpf_cutoff_hz.is_finite() {
            return Err(Error::config(format!(
                "lpf_cutoff_hz must be positive, got {}",
                self.lpf_cutoff_hz
            )));
        }
        if self.mavg_window < 1 {
            return Err(Error::config("mavg_window must be at least 1"));
        }
        if self.gate_sweep_k.is_empty() {
            return Err(Error::config("gate_sweep_k must list at least one gate factor"));
        }
        if self.gate_sweep_k.contains(&0) {
            return Err(Error::config("gate_sweep_k entries must be >= 1"));
        }
        if !(self.t_int_s > 0.0) || !self.t_int_s.is_finite() {
            return Err(Error::config(format!("t_int_s must be positive, got {}", self.t_int_s)));
        }
        let clk_mismatch = (self.cic.f_clk - self.quantize.f_clk).abs() / self.quantize.f_clk;
        if clk_mismatch > 1e-9 {
            return Err(Error::config(format!(
                "cic.f_clk ({}) must equal quantize.f_clk ({}): the decimator runs on the \
                 counter reference clock",
                self.cic.f_clk, self.quantize.f_clk
            )));
        }
        Ok(())
    }
}

/// The named experiments the harness knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Low-pass placement: filter the converted frequency stream vs. filter
    /// the stamp stream and convert afterwards.
    FilterPlacement,
    /// Gate-factor sweep, raw and low-pass filtered.
    GateSweep,
    /// Long gates emulated by a moving average over short-gate data.
    MavgEmulation,
    /// Uniform-rate outputs: event-triggered latching vs. ZOH + CIC.
    Resampling,
    /// Interpolating counter chain vs. a demodulating PLL.
    PllCompare,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::FilterPlacement,
        Experiment::GateSweep,
        Experiment::MavgEmulation,
        Experiment::Resampling,
        Experiment::PllCompare,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::FilterPlacement => "filter-placement",
            Experiment::GateSweep => "gate-sweep",
            Experiment::MavgEmulation => "mavg-emulation",
            Experiment::Resampling => "resampling",
            Experiment::PllCompare => "pll-compare",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Experiment> {
        Experiment::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
                Error::config(format!(
                    "unknown experiment '{s}'; expected one of: {}",
                    names.join(", ")
                ))
            })
    }
}

/// Whether a curve was measured from synthesized data or predicted from the
/// spectral model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegKind {
    Measured,
    Predicted,
}

/// Descriptive record of one processing leg, exported alongside its curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegMeta {
    pub label: String,
    pub kind: LegKind,
    /// Seed of the realization this leg processed (experiment seed).
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pipeline: Option<PipelineConfig>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pll: Option<PllConfig>,
    /// Post-pipeline steps applied by the harness, in order.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub post: Vec<String>,
}

/// One stability curve plus the description of how it was obtained.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub curve: AllanCurve,
    pub meta: LegMeta,
}

impl ExperimentResult {
    pub fn label(&self) -> &str {
        &self.meta.label
    }
}

/// Splits a 64-bit seed space by label with FNV-1a, so every (master seed,
/// experiment) pair gets an independent, reproducible stream.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in master.to_le_bytes().iter().copied().chain(label.bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Harness-side processing applied after the pipeline proper.
#[derive(Debug, Clone, Copy)]
enum PostStep {
    /// Keep every n-th sample (offset 0).
    Downsample(usize),
    /// Single-pole low-pass at the current rate.
    Lowpass(f64),
}

impl PostStep {
    fn describe(&self) -> String {
        match self {
            PostStep::Downsample(n) => format!("downsample({n})"),
            PostStep::Lowpass(fc) => format!("lowpass({fc} Hz)"),
        }
    }
}

/// Runs a stamp stream through a processing pipeline and returns the
/// fractional frequency deviation `f/f_o − 1` on a uniform grid at the
/// nominal output rate.
///
/// Placement semantics: the CIC decimator always operates on the held
/// (count, time) pair streams — that is what makes it useful — so
/// `conversion` decides only on which side of the reciprocal conversion the
/// low-pass and moving average run. The moving average emulates a longer
/// gate and therefore always precedes the low-pass when both are present.
pub fn execute_pipeline(
    stamps: &TimestampSeries,
    pipe: &PipelineConfig,
    f_o: f64,
) -> Result<UniformSeries> {
    pipe.validate()?;
    if !(f_o > 0.0) || !f_o.is_finite() {
        return Err(Error::config(format!("f_o must be positive, got {f_o}")));
    }
    let divided;
    let s: &TimestampSeries = if pipe.k > 1 {
        divided = stamps.divide(pipe.k)?;
        &divided
    } else {
        stamps
    };
    match pipe.resampling {
        ResamplingMode::None => {
            let rate = f_o / pipe.k as f64;
            match pipe.conversion {
                ConversionPlacement::BeforeFilter => {
                    let fs = s.to_frequency_reciprocal(1)?;
                    let mut u = fs.to_uniform(rate)?;
                    if let Some(w) = pipe.mavg_window {
                        u = moving_average(&u, w)?;
                    }
                    if let Some(fc) = pipe.lpf_cutoff_hz {
                        u = lowpass1(&u, fc)?;
                    }
                    Ok(u.map(|f| f / f_o - 1.0))
                }
                ConversionPlacement::AfterFilter => {
                    // Filtering the stamp stream is equivalent to filtering
                    // the period stream (differencing commutes with a causal
                    // LTI filter), and periods keep full precision.
                    let periods = s.periods()?;
                    let mut u = UniformSeries::new(rate, s.times[1], periods)?;
                    if let Some(w) = pipe.mavg_window {
                        u = moving_average(&u, w)?;
                    }
                    if let Some(fc) = pipe.lpf_cutoff_hz {
                        u = lowpass1(&u, fc)?;
                    }
                    let gate = s.k as f64;
                    Ok(u.map(|p| gate / p / f_o - 1.0))
                }
            }
        }
        ResamplingMode::Cic => {
            let cic = pipe.cic.as_ref().expect("validated: cic config present");
            let (counts, times) = cic_stamp_pairs(s, cic)?;
            match pipe.conversion {
                ConversionPlacement::AfterFilter => {
                    let mut c = counts;
                    let mut t = times;
                    if let Some(w) = pipe.mavg_window {
                        c = moving_average(&c, w)?;
                        t = moving_average(&t, w)?;
                    }
                    if let Some(fc) = pipe.lpf_cutoff_hz {
                        c = lowpass1(&c, fc)?;
                        t = lowpass1(&t, fc)?;
                    }
                    let f = convert_pairs(&c, &t)?;
                    Ok(f.map(|v| v / f_o - 1.0))
                }
                ConversionPlacement::BeforeFilter => {
                    let mut u = convert_pairs(&counts, &times)?;
                    if let Some(w) = pipe.mavg_window {
                        u = moving_average(&u, w)?;
                    }
                    if let Some(fc) = pipe.lpf_cutoff_hz {
                        u = lowpass1(&u, fc)?;
                    }
                    Ok(u.map(|v| v / f_o - 1.0))
                }
            }
        }
        ResamplingMode::EventTriggered => {
            let t_int = pipe.t_int_s.expect("validated: t_int_s present");
            let fs = event_triggered_resample(s, t_int)?;
            let mut u = fs.to_uniform(1.0 / t_int)?;
            if let Some(w) = pipe.mavg_window {
                u = moving_average(&u, w)?;
            }
            if let Some(fc) = pipe.lpf_cutoff_hz {
                u = lowpass1(&u, fc)?;
            }
            Ok(u.map(|v| v / f_o - 1.0))
        }
    }
}

/// Drops the transient of the slowest low-pass involved (8 time constants),
/// capped at half the series so short runs keep enough data to work with.
fn drop_settle(y: &mut UniformSeries, slowest_cutoff_hz: Option<f64>) {
    if let Some(fc) = slowest_cutoff_hz {
        let settle_s = 8.0 / (2.0 * std::f64::consts::PI * fc);
        let drop = (settle_s * y.rate).ceil() as usize;
        y.drop_front(drop.min(y.len() / 2));
    }
}

fn measured_curve(
    mut y: UniformSeries,
    slowest_cutoff_hz: Option<f64>,
    targets: Option<&[f64]>,
) -> Result<AllanCurve> {
    drop_settle(&mut y, slowest_cutoff_hz);
    let mut taus = match targets {
        Some(t) => aligned_taus(y.rate, y.len(), t),
        None => decade_taus(y.dt(), y.len(), MIN_TAU_PAIRS),
    };
    // Below one full period of the output filter the deviation measures the
    // filter's own correlation, not the signal, so filtered legs start their
    // curve at tau >= 1/f_c.
    if let Some(fc) = slowest_cutoff_hz {
        taus.retain(|&t| t >= 1.0 / fc);
    }
    if taus.is_empty() {
        return Err(Error::TooShort { needed: (MIN_TAU_PAIRS + 1), got: y.len() });
    }
    allan_deviation(&y, &taus)
}

/// Tau grid for a leg that must be comparable point-for-point with a leg
/// running at a different sample rate: each target tau is snapped to the
/// nearest multiple of this leg's own sample interval, and the leg's decade
/// grid below the first target is kept so fine-tau coverage is not lost.
/// Incommensurate rates leave a residual tau mismatch below 0.5/(m·rate·τ),
/// negligible against the comparison tolerances once a few samples fit in a
/// block.
fn aligned_taus(rate: f64, len: usize, targets: &[f64]) -> Vec<f64> {
    let dt = 1.0 / rate;
    let mut ms: Vec<u64> = Vec::new();
    if let Some(&first) = targets.first() {
        for t in decade_taus(dt, len, MIN_TAU_PAIRS) {
            if t < first * 0.99 {
                ms.push((t * rate).round() as u64);
            }
        }
    }
    for &t in targets {
        let m = (t * rate).round().max(1.0) as u64;
        if (m as usize).saturating_mul(MIN_TAU_PAIRS + 1) <= len {
            ms.push(m);
        }
    }
    ms.sort_unstable();
    ms.dedup();
    ms.into_iter().map(|m| m as f64 * dt).collect()
}

fn counter_leg(
    stamps: &TimestampSeries,
    f_o: f64,
    seed: u64,
    label: &str,
    pipe: PipelineConfig,
    post: &[PostStep],
    targets: Option<&[f64]>,
) -> Result<ExperimentResult> {
    let mut y = execute_pipeline(stamps, &pipe, f_o)?;
    let mut slowest = pipe.lpf_cutoff_hz;
    let mut post_desc = Vec::new();
    for step in post {
        match *step {
            PostStep::Downsample(n) => y = downsample(&y, n, 0)?,
            PostStep::Lowpass(fc) => {
                y = lowpass1(&y, fc)?;
                slowest = Some(slowest.map_or(fc, |s: f64| s.min(fc)));
            }
        }
        post_desc.push(step.describe());
    }
    let curve = measured_curve(y, slowest, targets)?;
    Ok(ExperimentResult {
        curve,
        meta: LegMeta {
            label: label.to_string(),
            kind: LegKind::Measured,
            seed,
            pipeline: Some(pipe),
            pll: None,
            post: post_desc,
        },
    })
}

fn predicted_leg(
    model: &PsdModel,
    f_o: f64,
    seed: u64,
    label: &str,
    pipe: PipelineConfig,
    taus: &[f64],
) -> Result<ExperimentResult> {
    let curve = predicted_counter_ad(model, &pipe, f_o, taus)?;
    Ok(ExperimentResult {
        curve,
        meta: LegMeta {
            label: label.to_string(),
            kind: LegKind::Predicted,
            seed,
            pipeline: Some(pipe),
            pll: None,
            post: Vec::new(),
        },
    })
}

fn quantized_stamps(noise: &NoiseConfig, cfg: &RunConfig, seed: u64) -> Result<TimestampSeries> {
    synthesize_timestamps(noise, cfg.duration_s, seed)?
        .quantize(cfg.quantize.f_clk, cfg.quantize.interp_res())
}

/// Runs one named experiment and returns its curves in a stable order.
pub fn run_experiment(exp: Experiment, cfg: &RunConfig) -> Result<Vec<ExperimentResult>> {
    cfg.validate()?;
    let seed = derive_seed(cfg.seed, exp.name());
    match exp {
        Experiment::FilterPlacement => filter_placement(cfg, seed),
        Experiment::GateSweep => gate_sweep(cfg, seed),
        Experiment::MavgEmulation => mavg_emulation(cfg, seed),
        Experiment::Resampling => resampling(cfg, seed),
        Experiment::PllCompare => pll_compare(cfg, seed),
    }
}

fn filter_placement(cfg: &RunConfig, seed: u64) -> Result<Vec<ExperimentResult>> {
    let noise = &cfg.filter_placement_noise;
    let stamps = quantized_stamps(noise, cfg, seed)?;
    let fc = cfg.lpf_cutoff_hz;
    let raw = PipelineConfig::raw_gate(1);
    let before = PipelineConfig { lpf_cutoff_hz: Some(fc), ..PipelineConfig::raw_gate(1) };
    let after = PipelineConfig {
        conversion: ConversionPlacement::AfterFilter,
        lpf_cutoff_hz: Some(fc),
        ..PipelineConfig::raw_gate(1)
    };
    let mut out = vec![
        counter_leg(&stamps, noise.f_o, seed, "raw", raw.clone(), &[], None)?,
        counter_leg(&stamps, noise.f_o, seed, "convert-then-filter", before.clone(), &[], None)?,
        counter_leg(&stamps, noise.f_o, seed, "filter-then-convert", after.clone(), &[], None)?,
    ];
    let model = PsdModel::from_noise_config(noise);
    let taus = out[0].curve.taus.clone();
    out.push(predicted_leg(&model, noise.f_o, seed, "raw-theory", raw, &taus)?);
    out.push(predicted_leg(&model, noise.f_o, seed, "convert-then-filter-theory", before, &taus)?);
    out.push(predicted_leg(&model, noise.f_o, seed, "filter-then-convert-theory", after, &taus)?);
    Ok(out)
}

fn gate_sweep(cfg: &RunConfig, seed: u64) -> Result<Vec<ExperimentResult>> {
    let noise = &cfg.noise;
    let stamps = quantized_stamps(noise, cfg, seed)?;
    // The longest gate defines the comparison grid; shorter gates snap their
    // tau lists onto it so the curves can be overlaid point for point.
    let k_max = cfg.gate_sweep_k.iter().copied().max().unwrap_or(1);
    let mut raw_legs = Vec::new();
    let mut lpf_legs = Vec::new();
    for (legs, fc) in [(&mut raw_legs, None), (&mut lpf_legs, Some(cfg.lpf_cutoff_hz))] {
        let coarse = counter_leg(
            &stamps,
            noise.f_o,
            seed,
            &leg_label(fc, k_max),
            PipelineConfig { lpf_cutoff_hz: fc, ..PipelineConfig::raw_gate(k_max) },
            &[],
            None,
        )?;
        let targets = coarse.curve.taus.clone();
        for &k in &cfg.gate_sweep_k {
            if k == k_max {
                legs.push(coarse.clone());
                continue;
            }
            let pipe = PipelineConfig { lpf_cutoff_hz: fc, ..PipelineConfig::raw_gate(k) };
            legs.push(counter_leg(
                &stamps,
                noise.f_o,
                seed,
                &leg_label(fc, k),
                pipe,
                &[],
                Some(&targets),
            )?);
        }
    }
    raw_legs.extend(lpf_legs);
    Ok(raw_legs)
}

fn leg_label(fc: Option<f64>, k: u64) -> String {
    match fc {
        None => format!("raw-k{k}"),
        Some(_) => format!("lpf-k{k}"),
    }
}

fn mavg_emulation(cfg: &RunConfig, seed: u64) -> Result<Vec<ExperimentResult>> {
    let noise = &cfg.noise;
    let stamps = quantized_stamps(noise, cfg, seed)?;
    let w = cfg.mavg_window;
    let fc = cfg.lpf_cutoff_hz;
    let mavg_pipe = PipelineConfig {
        conversion: ConversionPlacement::AfterFilter,
        mavg_window: Some(w),
        ..PipelineConfig::raw_gate(1)
    };
    let mavg_lpf_pipe = PipelineConfig { lpf_cutoff_hz: Some(fc), ..mavg_pipe.clone() };
    // The divided-counter leg defines the comparison grid; the full-rate
    // moving-average legs snap onto it so the equivalence is point-for-point.
    let divided = counter_leg(
        &stamps,
        noise.f_o,
        seed,
        &format!("raw-k{w}"),
        PipelineConfig::raw_gate(w as u64),
        &[],
        None,
    )?;
    let targets = divided.curve.taus.clone();
    let down_lpf = counter_leg(
        &stamps,
        noise.f_o,
        seed,
        "mavg-downsampled-lpf",
        mavg_pipe.clone(),
        &[PostStep::Downsample(w), PostStep::Lowpass(fc)],
        None,
    )?;
    let lpf_targets = down_lpf.curve.taus.clone();
    Ok(vec![
        counter_leg(&stamps, noise.f_o, seed, "raw-k1", PipelineConfig::raw_gate(1), &[], None)?,
        divided,
        counter_leg(
            &stamps,
            noise.f_o,
            seed,
            "mavg-full-rate",
            mavg_pipe.clone(),
            &[],
            Some(&targets),
        )?,
        counter_leg(
            &stamps,
            noise.f_o,
            seed,
            "mavg-downsampled",
            mavg_pipe.clone(),
            &[PostStep::Downsample(w)],
            Some(&targets),
        )?,
        counter_leg(
            &stamps,
            noise.f_o,
            seed,
            "mavg-full-rate-lpf",
            mavg_lpf_pipe,
            &[],
            Some(&lpf_targets),
        )?,
        down_lpf,
    ])
}

fn resampling(cfg: &RunConfig, seed: u64) -> Result<Vec<ExperimentResult>> {
    let noise = &cfg.noise;
    let stamps = quantized_stamps(noise, cfg, seed)?;
    let fc = cfg.lpf_cutoff_hz;
    let evt = PipelineConfig {
        resampling: ResamplingMode::EventTriggered,
        t_int_s: Some(cfg.t_int_s),
        ..PipelineConfig::raw_gate(1)
    };
    let evt_lpf = PipelineConfig { lpf_cutoff_hz: Some(fc), ..evt.clone() };
    let cic = PipelineConfig {
        conversion: ConversionPlacement::AfterFilter,
        resampling: ResamplingMode::Cic,
        cic: Some(cfg.cic),
        ..PipelineConfig::raw_gate(1)
    };
    let cic_lpf = PipelineConfig { lpf_cutoff_hz: Some(fc), ..cic.clone() };
    // The CIC legs run at the lowest rate; everything else aligns to them.
    let cic_leg = counter_leg(&stamps, noise.f_o, seed, "cic", cic, &[], None)?;
    let cic_lpf_leg = counter_leg(&stamps, noise.f_o, seed, "cic-lpf", cic_lpf, &[], None)?;
    let targets = cic_leg.curve.taus.clone();
    let lpf_targets = cic_lpf_leg.curve.taus.clone();
    Ok(vec![
        counter_leg(
            &stamps,
            noise.f_o,
            seed,
            "raw",
            PipelineConfig::raw_gate(1),
            &[],
            Some(&targets),
        )?,
        counter_leg(
            &stamps,
            noise.f_o,
            seed,
            "raw-lpf",
            PipelineConfig { lpf_cutoff_hz: Some(fc), ..PipelineConfig::raw_gate(1) },
            &[],
            Some(&lpf_targets),
        )?,
        counter_leg(&stamps, noise.f_o, seed, "event-triggered", evt, &[], Some(&targets))?,
        counter_leg(
            &stamps,
            noise.f_o,
            seed,
            "event-triggered-lpf",
            evt_lpf,
            &[],
            Some(&lpf_targets),
        )?,
        cic_leg,
        cic_lpf_leg,
    ])
}

fn pll_compare(cfg: &RunConfig, seed: u64) -> Result<Vec<ExperimentResult>> {
    let noise = &cfg.noise;
    let stamps = quantized_stamps(noise, cfg, seed)?;
    let fc = cfg.lpf_cutoff_hz;
    let cic_lpf = PipelineConfig {
        conversion: ConversionPlacement::AfterFilter,
        resampling: ResamplingMode::Cic,
        cic: Some(cfg.cic),
        lpf_cutoff_hz: Some(fc),
        ..PipelineConfig::raw_gate(1)
    };
    let counter = counter_leg(&stamps, noise.f_o, seed, "counter-cic-lpf", cic_lpf.clone(), &[], None)?;
    let counter_taus = counter.curve.taus.clone();
    let mut out = vec![
        counter_leg(
            &stamps,
            noise.f_o,
            seed,
            "counter-raw",
            PipelineConfig::raw_gate(1),
            &[],
            Some(&counter_taus),
        )?,
        counter,
    ];

    // The PLL tracks the same realization: the decimated trajectory shares
    // the synthesis RNG stream sample for sample.
    let synth_rate = noise.sample_rate();
    let decim = (synth_rate / cfg.pll.rate).round().max(1.0) as u64;
    let alpha = synthesize_decimated_alpha(noise, cfg.duration_s, seed, decim)?;
    let pll_rate = alpha.rate;
    let dt = alpha.dt();
    let f_o = noise.f_o;
    let phase_values: Vec<f64> = alpha
        .values
        .iter()
        .enumerate()
        .map(|(j, &a)| f_o * (j as f64 * dt + a))
        .collect();
    let phase = UniformSeries::new(pll_rate, 0.0, phase_values)?;
    let pll_cfg = PllConfig { rate: pll_rate, ..cfg.pll };
    let fs = pll_track(&phase, &pll_cfg)?;
    let mut y = fs.to_uniform(pll_rate)?.map(|f| f / f_o - 1.0);
    // Lock-in transient: integrator preload plus a few closed-loop time
    // constants.
    y.drop_front(((0.25 * pll_rate).ceil() as usize).min(y.len() / 2));
    let taus = aligned_taus(pll_rate, y.len(), &counter_taus);
    if taus.is_empty() {
        return Err(Error::TooShort { needed: MIN_TAU_PAIRS + 1, got: y.len() });
    }
    let pll_curve = allan_deviation(&y, &taus)?;
    out.push(ExperimentResult {
        curve: pll_curve,
        meta: LegMeta {
            label: "pll".to_string(),
            kind: LegKind::Measured,
            seed,
            pipeline: None,
            pll: Some(pll_cfg),
            post: Vec::new(),
        },
    });

    let model = PsdModel::from_noise_config(noise);
    out.push(predicted_leg(&model, f_o, seed, "counter-cic-lpf-theory", cic_lpf, &counter_taus)?);
    let pll_psd = move |omega: f64| -> f64 {
        sso_fractional_psd(&model, omega) * pll_closed_loop_power(&pll_cfg, omega)
    };
    let pll_theory = allan_from_psd(&pll_psd, &taus, pll_rate)?;
    out.push(ExperimentResult {
        curve: pll_theory,
        meta: LegMeta {
            label: "pll-theory".to_string(),
            kind: LegKind::Predicted,
            seed,
            pipeline: None,
            pll: Some(pll_cfg),
            post: Vec::new(),
        },
    });
    Ok(out)
}

/// Closed-loop power response |T(jω)|² of the demodulating PLL, from the
/// continuous-time loop gain L(s) = 360·(kp + ki/s)·H_d(s)/s with H_d the
/// demodulator low-pass. 360 converts the cycle-valued phase error to the
/// degrees the PI gains act on; the final 1/s is the CO frequency-to-phase
/// integration.
pub fn pll_closed_loop_power(cfg: &PllConfig, omega: f64) -> f64 {
    if omega <= 0.0 {
        return 1.0;
    }
    let omega_d = 2.0 * std::f64::consts::PI * cfg.demod_cutoff;
    // L = 360·(kp − j·ki/ω) · 1/(1 + jω/ω_d) · (−j/ω)
    let (pi_re, pi_im) = (cfg.kp, -cfg.ki / omega);
    let (hd_re, hd_im) = {
        let d = 1.0 + (omega / omega_d) * (omega / omega_d);
        (1.0 / d, -(omega / omega_d) / d)
    };
    let (a_re, a_im) = (pi_re * hd_re - pi_im * hd_im, pi_re * hd_im + pi_im * hd_re);
    // multiply by −j/ω and the 360 cycle→degree factor
    let (l_re, l_im) = (360.0 * a_im / omega, -360.0 * a_re / omega);
    // T = L/(1+L)
    let (d_re, d_im) = (1.0 + l_re, l_im);
    let den = d_re * d_re + d_im * d_im;
    (l_re * l_re + l_im * l_im) / den
}

#[derive(Serialize)]
struct LegEntry<'a> {
    csv: String,
    #[serde(flatten)]
    meta: &'a LegMeta,
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    tool: &'static str,
    version: &'static str,
    revision: &'static str,
    experiment: &'a str,
    master_seed: u64,
    experiment_seed: u64,
    duration_s: f64,
    noise: &'a NoiseConfig,
    quantize: &'a QuantizeConfig,
    legs: Vec<LegEntry<'a>>,
}

fn io_with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn sanitize_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

/// Writes one CSV per curve plus a metadata document describing the whole
/// run. Output is deterministic: re-exporting the same run produces
/// byte-identical files. Returns the paths written (metadata last). An empty
/// result set still gets its metadata document.
pub fn export_results(
    exp: Experiment,
    cfg: &RunConfig,
    results: &[ExperimentResult],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| io_with_path(out_dir, e))?;
    let noise = match exp {
        Experiment::FilterPlacement => &cfg.filter_placement_noise,
        _ => &cfg.noise,
    };
    let mut written = Vec::new();
    let mut legs = Vec::new();
    for r in results {
        let fname = format!("{}_{}.csv", exp.name(), sanitize_label(r.label()));
        let path = out_dir.join(&fname);
        let mut text = String::from("tau_s,sigma_y,count\n");
        for i in 0..r.curve.len() {
            text.push_str(&format!(
                "{},{},{}\n",
                r.curve.taus[i], r.curve.sigmas[i], r.curve.counts[i]
            ));
        }
        fs::write(&path, text).map_err(|e| io_with_path(&path, e))?;
        legs.push(LegEntry { csv: fname, meta: &r.meta });
        written.push(path);
    }
    let meta = RunMetadata {
        tool: "fcsim",
        version: env!("CARGO_PKG_VERSION"),
        revision: env!("FCSIM_BUILD_REV"),
        experiment: exp.name(),
        master_seed: cfg.seed,
        experiment_seed: derive_seed(cfg.seed, exp.name()),
        duration_s: cfg.duration_s,
        noise,
        quantize: &cfg.quantize,
        legs,
    };
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::config(format!("metadata serialization failed: {e}")))?;
    let meta_path = out_dir.join(format!("{}_metadata.json", exp.name()));
    fs::write(&meta_path, json + "\n").map_err(|e| io_with_path(&meta_path, e))?;
    written.push(meta_path);
    Ok(written)
}
