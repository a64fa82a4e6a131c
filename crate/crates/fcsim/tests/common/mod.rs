//! Shared measurement oracles for the integration suite. The estimators here
//! are implemented independently of the library under test (separate code
//! paths) so agreement is evidence rather than tautology.
#![allow(dead_code)]

use fcsim::harness::{QuantizeConfig, RunConfig};
use fcsim::resample::CicConfig;
use fcsim::signal::NoiseConfig;

/// One-second run at a 10 kHz carrier: every experiment leg stays meaningful
/// while a full five-experiment pass takes about a second.
pub fn smoke_run_config() -> RunConfig {
    RunConfig {
        seed: 7,
        duration_s: 1.0,
        noise: NoiseConfig {
            f_o: 10e3,
            oversample: 16,
            bpf_bandwidth: 2e3,
            ..NoiseConfig::default()
        },
        filter_placement_noise: NoiseConfig {
            f_o: 10e3,
            oversample: 16,
            bpf_bandwidth: 2e3,
            k_ratio: 100.0,
            s_th: 4.41e-11,
            ..NoiseConfig::default()
        },
        quantize: QuantizeConfig { f_clk: 6.5e6, interp_steps: 130 },
        cic: CicConfig { decimation: 512, f_clk: 6.5e6, ..CicConfig::default() },
        lpf_cutoff_hz: 40.0,
        mavg_window: 121,
        gate_sweep_k: vec![1, 11, 121],
        t_int_s: 1e-3,
        pll: Default::default(),
    }
}

/// Non-overlapping two-sample deviation at block length `m`, written as a
/// direct transcription of the defining sum.
pub fn brute_allan(values: &[f64], m: usize) -> (f64, u64) {
    assert!(m >= 1, "block length must be at least one sample");
    let blocks: Vec<f64> = values
        .chunks_exact(m)
        .map(|c| c.iter().sum::<f64>() / m as f64)
        .collect();
    assert!(blocks.len() >= 2, "need at least two blocks, got {}", blocks.len());
    let mut acc = 0.0;
    for pair in blocks.windows(2) {
        acc += (pair[1] - pair[0]).powi(2);
    }
    let pairs = (blocks.len() - 1) as u64;
    ((acc / (2.0 * pairs as f64)).sqrt(), pairs)
}

/// In-place iterative radix-2 FFT (decimation in time).
fn fft(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    assert!(n.is_power_of_two(), "FFT length must be a power of two, got {n}");
    let shift = usize::BITS - n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> shift;
        if j > i {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * std::f64::consts::PI / len as f64;
        let (wr, wi) = (ang.cos(), ang.sin());
        for start in (0..n).step_by(len) {
            let (mut cr, mut ci) = (1.0, 0.0);
            for k in 0..len / 2 {
                let (ar, ai) = (re[start + k], im[start + k]);
                let (br, bi) = (re[start + k + len / 2], im[start + k + len / 2]);
                let (tr, ti) = (br * cr - bi * ci, br * ci + bi * cr);
                re[start + k] = ar + tr;
                im[start + k] = ai + ti;
                re[start + k + len / 2] = ar - tr;
                im[start + k + len / 2] = ai - ti;
                let next = (cr * wr - ci * wi, cr * wi + ci * wr);
                cr = next.0;
                ci = next.1;
            }
        }
        len <<= 1;
    }
}

/// Welch periodogram with a Hann window and 50% overlap. Returns
/// (frequency, density) pairs for bins 1..n/2; the density S(f) is one-sided
/// and normalized so that ∫S(f)df equals the process variance — i.e. it
/// matches the library's angular-frequency convention via S(f) = S_ω(2πf).
pub fn welch_psd(values: &[f64], rate: f64, seg: usize) -> Vec<(f64, f64)> {
    assert!(seg.is_power_of_two(), "segment length must be a power of two");
    assert!(values.len() >= seg, "series shorter than one segment");
    let window: Vec<f64> = (0..seg)
        .map(|i| {
            let x = std::f64::consts::PI * i as f64 / seg as f64;
            x.sin() * x.sin()
        })
        .collect();
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let mut acc = vec![0.0; seg / 2];
    let mut segments = 0usize;
    let mut start = 0;
    while start + seg <= values.len() {
        let slice = &values[start..start + seg];
        let mean = slice.iter().sum::<f64>() / seg as f64;
        let mut re: Vec<f64> =
            slice.iter().zip(&window).map(|(&v, &w)| (v - mean) * w).collect();
        let mut im = vec![0.0; seg];
        fft(&mut re, &mut im);
        for (k, slot) in acc.iter_mut().enumerate().take(seg / 2).skip(1) {
            *slot += (re[k] * re[k] + im[k] * im[k]) * 2.0 / (rate * win_power);
        }
        segments += 1;
        start += seg / 2;
    }
    let df = rate / seg as f64;
    (1..seg / 2)
        .map(|k| (k as f64 * df, acc[k] / segments as f64))
        .collect()
}

/// Deterministic uniform variates in (0, 1) from a 64-bit LCG
/// (Knuth MMIX constants), independent of the library's generators.
pub fn lcg_uniforms(seed: u64, n: usize) -> Vec<f64> {
    let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1);
    (0..n)
        .map(|_| {
            state = state
                .wrapping_mul(6_364_136_223_846_793_005)
                .wrapping_add(1_442_695_040_888_963_407);
            ((state >> 11) as f64 + 0.5) / (1u64 << 53) as f64
        })
        .collect()
}

/// Standard normal variates via Box–Muller over [`lcg_uniforms`].
pub fn lcg_normals(seed: u64, n: usize) -> Vec<f64> {
    let u = lcg_uniforms(seed, 2 * n.div_ceil(2));
    let mut out = Vec::with_capacity(n);
    for pair in u.chunks_exact(2) {
        let r = (-2.0 * pair[0].ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * pair[1];
        out.push(r * theta.cos());
        if out.len() < n {
            out.push(r * theta.sin());
        }
    }
    out
}

/// Single-bin DFT amplitude of a real tone at `f` hertz.
pub fn goertzel_amplitude(values: &[f64], rate: f64, f: f64) -> f64 {
    let n = values.len() as f64;
    let w = 2.0 * std::f64::consts::PI * f / rate;
    let coeff = 2.0 * w.cos();
    let (mut s1, mut s2) = (0.0, 0.0);
    for &v in values {
        let s0 = v + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    let power = s1 * s1 + s2 * s2 - coeff * s1 * s2;
    2.0 * power.max(0.0).sqrt() / n
}

/// Least-squares slope of ln(y) against ln(x).
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    assert!(points.len() >= 2, "slope fit needs at least two points");
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0.ln()).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        sxx += (x.ln() - mx) * (x.ln() - mx);
        sxy += (x.ln() - mx) * (y.ln() - my);
    }
    sxy / sxx
}

/// Mean of the density values whose frequencies fall in [f_lo, f_hi);
/// averaging across many bins tames the chi-squared scatter of single
/// periodogram bins.
pub fn band_average(psd: &[(f64, f64)], f_lo: f64, f_hi: f64) -> f64 {
    let vals: Vec<f64> = psd
        .iter()
        .filter(|&&(f, _)| f >= f_lo && f < f_hi)
        .map(|&(_, s)| s)
        .collect();
    assert!(!vals.is_empty(), "no periodogram bins between {f_lo} and {f_hi} Hz");
    vals.iter().sum::<f64>() / vals.len() as f64
}
