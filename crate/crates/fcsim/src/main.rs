//! Command-line front-end: run named experiments, compute Allan deviations
//! from sampled data, or predict them from the spectral model.
//!
//! The process exits 0 only when every requested curve was produced; on any
//! failure it prints a machine-readable JSON error list to stderr and exits 1.

// Same convention as the library: `!(x > 0.0)` rejects NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use fcsim::harness::{export_results, run_experiment, Experiment, RunConfig};
use fcsim::pipeline::{PipelineConfig, ResamplingMode};
use fcsim::series::UniformSeries;
use fcsim::signal::NoiseConfig;
use fcsim::stability::{
    allan_deviation, decade_taus, predicted_counter_ad, AllanCurve, PsdModel,
};
use fcsim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fcsim",
    version,
    about = "Noisy-oscillator and reciprocal frequency counter simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a named experiment (or `all`) and export its stability curves.
    Run {
        /// One of: filter-placement, gate-sweep, mavg-emulation, resampling,
        /// pll-compare, or `all`.
        experiment: String,
        /// TOML run configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the master seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the measurement duration in seconds.
        #[arg(long)]
        duration: Option<f64>,
        /// Output directory for CSV and metadata files.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Compute the Allan deviation of uniformly sampled data from a CSV
    /// file: either one fractional-frequency column, or `time,value` rows.
    Ad {
        input: PathBuf,
        /// Sample rate in Hz; required for single-column input, overrides
        /// the time column otherwise.
        #[arg(long)]
        rate: Option<f64>,
        /// Write the curve here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict the counter Allan deviation from a TOML model/pipeline file.
    Predict {
        config: PathBuf,
        /// Write the curve here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// One machine-readable failure record.
#[derive(Serialize)]
struct CliError {
    command: String,
    context: String,
    error: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let errors = match cli.cmd {
        Cmd::Run { experiment, config, seed, duration, out } => {
            cmd_run(&experiment, config.as_deref(), seed, duration, &out)
        }
        Cmd::Ad { input, rate, out } => cmd_ad(&input, rate, out.as_deref()),
        Cmd::Predict { config, out } => cmd_predict(&config, out.as_deref()),
    };
    if errors.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{}", serde_json::to_string_pretty(&errors).expect("error list is serializable"));
        ExitCode::FAILURE
    }
}

fn load_run_config(
    config: Option<&Path>,
    seed: Option<u64>,
    duration: Option<f64>,
) -> Result<RunConfig> {
    let mut cfg = match config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(d) = duration {
        cfg.duration_s = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(
    experiment: &str,
    config: Option<&Path>,
    seed: Option<u64>,
    duration: Option<f64>,
    out: &Path,
) -> Vec<CliError> {
    let cfg = match load_run_config(config, seed, duration) {
        Ok(cfg) => cfg,
        Err(e) => {
            return vec![CliError {
                command: "run".into(),
                context: "configuration".into(),
                error: e.to_string(),
            }]
        }
    };
    let experiments: Vec<Experiment> = if experiment == "all" {
        Experiment::ALL.to_vec()
    } else {
        match experiment.parse() {
            Ok(exp) => vec![exp],
            Err(e) => {
                return vec![CliError {
                    command: "run".into(),
                    context: experiment.into(),
                    error: e.to_string(),
                }]
            }
        }
    };
    let mut errors = Vec::new();
    for exp in experiments {
        match run_experiment(exp, &cfg).and_then(|results| export_results(exp, &cfg, &results, out))
        {
            Ok(paths) => {
                for p in paths {
                    println!("{}", p.display());
                }
            }
            Err(e) => errors.push(CliError {
                command: "run".into(),
                context: exp.name().into(),
                error: e.to_string(),
            }),
        }
    }
    errors
}

fn cmd_ad(input: &Path, rate: Option<f64>, out: Option<&Path>) -> Vec<CliError> {
    match ad_from_csv(input, rate).and_then(|curve| write_curve(&curve, out)) {
        Ok(()) => Vec::new(),
        Err(e) => vec![CliError {
            command: "ad".into(),
            context: input.display().to_string(),
            error: e.to_string(),
        }],
    }
}

fn cmd_predict(config: &Path, out: Option<&Path>) -> Vec<CliError> {
    match predict_from_config(config).and_then(|curve| write_curve(&curve, out)) {
        Ok(()) => Vec::new(),
        Err(e) => vec![CliError {
            command: "predict".into(),
            context: config.display().to_string(),
            error: e.to_string(),
        }],
    }
}

fn ad_from_csv(path: &Path, rate: Option<f64>) -> Result<AllanCurve> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        let row = match parsed {
            Ok(row) => row,
            // A non-numeric first line is a header; anywhere else it is data
            // corruption worth reporting.
            Err(_) if lineno == 0 => continue,
            Err(e) => {
                return Err(Error::ConfigParse(format!(
                    "{} line {}: {e}",
                    path.display(),
                    lineno + 1
                )))
            }
        };
        match row.len() {
            1 => values.push(row[0]),
            2 => {
                times.push(row[0]);
                values.push(row[1]);
            }
            n => {
                return Err(Error::ConfigParse(format!(
                    "{} line {}: expected 1 or 2 columns, got {n}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    let rate = match rate {
        Some(r) => r,
        None => {
            if times.len() < 2 {
                return Err(Error::config(
                    "single-column input needs --rate to fix the sample interval",
                ));
            }
            let dt = times[1] - times[0];
            if !(dt > 0.0) {
                return Err(Error::config("time column must be strictly increasing"));
            }
            1.0 / dt
        }
    };
    let series = UniformSeries::new(rate, times.first().copied().unwrap_or(0.0), values)?;
    let taus = decade_taus(series.dt(), series.len(), 8);
    if taus.is_empty() {
        return Err(Error::TooShort { needed: 9, got: series.len() });
    }
    allan_deviation(&series, &taus)
}

/// Input schema of `fcsim predict`.
#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PredictConfig {
    noise: NoiseConfig,
    pipeline: PipelineConfig,
    /// Explicit averaging times; when omitted a decade grid for a
    /// `duration_s`-long measurement is used.
    taus: Option<Vec<f64>>,
    duration_s: f64,
}

impl Default for PredictConfig {
    fn default() -> Self {
        PredictConfig {
            noise: NoiseConfig::default(),
            pipeline: PipelineConfig::raw_gate(1),
            taus: None,
            duration_s: 10.0,
        }
    }
}

fn predict_from_config(path: &Path) -> Result<AllanCurve> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let cfg: PredictConfig = toml::from_str(&text)
        .map_err(|e| Error::ConfigParse(format!("{}: {e}", path.display())))?;
    cfg.noise.validate()?;
    cfg.pipeline.validate()?;
    let model = PsdModel::from_noise_config(&cfg.noise);
    let data_rate = match cfg.pipeline.resampling {
        ResamplingMode::Cic => cfg.pipeline.cic.as_ref().expect("validated").output_rate(),
        _ => cfg.noise.f_o / cfg.pipeline.k as f64,
    };
    let taus = match &cfg.taus {
        Some(taus) => taus.clone(),
        None => {
            let n = (cfg.duration_s * data_rate) as usize;
            let taus = decade_taus(1.0 / data_rate, n, 8);
            if taus.is_empty() {
                return Err(Error::config(format!(
                    "duration_s {} is too short for a tau grid at {data_rate} Hz",
                    cfg.duration_s
                )));
            }
            taus
        }
    };
    predicted_counter_ad(&model, &cfg.pipeline, cfg.noise.f_o, &taus)
}

fn write_curve(curve: &AllanCurve, out: Option<&Path>) -> Result<()> {
    let mut text = String::from("tau_s,sigma_y,count\n");
    for i in 0..curve.len() {
        text.push_str(&format!("{},{},{}\n", curve.taus[i], curve.sigmas[i], curve.counts[i]));
    }
    match out {
        Some(path) => fs::write(path, text).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
