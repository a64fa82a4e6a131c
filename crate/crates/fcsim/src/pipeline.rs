//! Counter processing-pipeline description: gate division, placement of the
//! timestamp-to-frequency conversion relative to filtering, the resampling
//! stage, and the post-conversion filters. The struct is plain data; the
//! harness interprets it against a timestamp stream.

use crate::resample::CicConfig;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Where the reciprocal conversion sits relative to the low-pass/moving-
/// average filters.
///
/// `AfterFilter` filters the cycle-count and timestamp streams first and
/// converts at the output rate, which keeps the broadband phase noise away
/// from the 1/(1−z) nonlinearity. `BeforeFilter` converts each gate to
/// frequency first and filters the frequency samples. The CIC resampler,
/// when present, always runs on the (count, time) pair streams; placement
/// decides only what the later filters see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConversionPlacement {
    BeforeFilter,
    AfterFilter,
}

/// How the event-spaced timestamp stream is brought onto a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResamplingMode {
    /// Keep the event spacing; output timestamps follow the input edges.
    None,
    /// Zero-order hold on the reference clock followed by a decimating
    /// cascaded integrator–comb filter.
    Cic,
    /// Latch the first edge after each trigger tick and form frequency from
    /// consecutive latched (count, time) pairs.
    EventTriggered,
}

/// Full description of one counter processing chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Gate length in input periods: every k-th timestamp is kept.
    pub k: u64,
    pub conversion: ConversionPlacement,
    pub resampling: ResamplingMode,
    /// Required when `resampling` is `cic`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cic: Option<CicConfig>,
    /// First-order low-pass applied at the output data rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lpf_cutoff_hz: Option<f64>,
    /// Moving average applied at the output data rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mavg_window: Option<usize>,
    /// Trigger interval for event-triggered resampling, seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_int_s: Option<f64>,
}

impl PipelineConfig {
    /// A bare reciprocal counter at gate `k` periods: no resampling, no
    /// filtering, conversion directly on the divided timestamps.
    pub fn raw_gate(k: u64) -> PipelineConfig {
        PipelineConfig {
            k,
            conversion: ConversionPlacement::BeforeFilter,
            resampling: ResamplingMode::None,
            cic: None,
            lpf_cutoff_hz: None,
            mavg_window: None,
            t_int_s: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("gate divider k must be at least 1"));
        }
        match self.resampling {
            ResamplingMode::Cic => {
                let cic = self
                    .cic
                    .as_ref()
                    .ok_or_else(|| Error::config("cic resampling requires a [cic] section"))?;
                cic.validate()?;
            }
            ResamplingMode::EventTriggered => {
                match self.t_int_s {
                    Some(t) if t > 0.0 && t.is_finite() => {}
                    _ => {
                        return Err(Error::config(
                            "event-triggered resampling requires positive t_int_s",
                        ))
                    }
                }
                if self.conversion == ConversionPlacement::AfterFilter {
                    return Err(Error::config(
                        "event-triggered resampling converts at the latch; \
                         conversion must be before_filter",
                    ));
                }
            }
            ResamplingMode::None => {}
        }
        if self.cic.is_some() && self.resampling != ResamplingMode::Cic {
            return Err(Error::config("cic section given but resampling is not cic"));
        }
        if let Some(fc) = self.lpf_cutoff_hz {
            if !(fc > 0.0) || !fc.is_finite() {
                return Err(Error::config(format!(
                    "lpf_cutoff_hz must be positive, got {fc}"
                )));
            }
        }
        if let Some(w) = self.mavg_window {
            if w == 0 {
                return Err(Error::config("mavg_window must be at least 1"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_gate_validates() {
        PipelineConfig::raw_gate(121).validate().unwrap();
    }

    #[test]
    fn zero_k_rejected() {
        let err = PipelineConfig::raw_gate(0).validate().unwrap_err();
        assert!(err.to_string().contains("k"), "unexpected error: {err}");
    }

    #[test]
    fn cic_mode_requires_section() {
        let mut cfg = PipelineConfig::raw_gate(1);
        cfg.resampling = ResamplingMode::Cic;
        assert!(cfg.validate().is_err());
        cfg.cic = Some(CicConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn stray_cic_section_rejected() {
        let mut cfg = PipelineConfig::raw_gate(1);
        cfg.cic = Some(CicConfig::default());
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("resampling is not cic"));
    }

    #[test]
    fn event_triggered_needs_interval() {
        let mut cfg = PipelineConfig::raw_gate(1);
        cfg.resampling = ResamplingMode::EventTriggered;
        assert!(cfg.validate().is_err());
        cfg.t_int_s = Some(1e-4);
        cfg.validate().unwrap();
    }

    #[test]
    fn event_triggered_cannot_defer_conversion() {
        let mut cfg = PipelineConfig::raw_gate(1);
        cfg.resampling = ResamplingMode::EventTriggered;
        cfg.t_int_s = Some(1e-4);
        cfg.conversion = ConversionPlacement::AfterFilter;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("latch"), "unexpected error: {err}");
    }

    #[test]
    fn toml_round_trip_preserves_config() {
        let mut cfg = PipelineConfig::raw_gate(11);
        cfg.conversion = ConversionPlacement::AfterFilter;
        cfg.lpf_cutoff_hz = Some(50.0);
        let text = toml::to_string(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "k = 1\nconversion = \"after_filter\"\nresampling = \"none\"\ngatee = 5\n";
        let err = toml::from_str::<PipelineConfig>(text).unwrap_err();
        assert!(
            err.to_string().contains("gatee"),
            "error should name the offending key: {err}"
        );
    }
}
