//! Experiment configuration: one JSON document with frequencies in Hz,
//! durations in ns and temperatures in mK. Every field is optional and
//! defaults to the fluxonium operating point.

use std::path::Path;

use qfsim_core::channel::Transmission;
use qfsim_core::discriminate::{separation_for_error, InterceptMode};
use qfsim_core::physics::thermal_population;
use qfsim_core::sequencer::readout_pulse;
use qfsim_core::{ChannelConfig, DemodConfig, LatencyModel, QubitParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: u64,
    pub n_shots: usize,
    pub histogram_bins: usize,
    pub qubit: QubitFile,
    pub channel: ChannelFile,
    pub demod: DemodFile,
    pub latency: LatencyFile,
    pub calibration: CalibrationFile,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            seed: 1,
            n_shots: 100_000,
            histogram_bins: 64,
            qubit: QubitFile::default(),
            channel: ChannelFile::default(),
            demod: DemodFile::default(),
            latency: LatencyFile::default(),
            calibration: CalibrationFile::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QubitFile {
    pub f01_hz: f64,
    pub t1_ns: f64,
    /// Equilibrium excited population; mutually exclusive with `t_eff_mk`.
    pub p1_eq: Option<f64>,
    pub t_eff_mk: Option<f64>,
    pub pi_error: f64,
    pub pi_duration_ns: u64,
}

impl Default for QubitFile {
    fn default() -> Self {
        let q = QubitParams::baseline();
        Self {
            f01_hz: q.f01,
            t1_ns: (q.t1 * 1e9).round(),
            p1_eq: None,
            t_eff_mk: None,
            pi_error: q.pi_error,
            pi_duration_ns: (q.pi_duration * 1e9).round() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelFile {
    pub t_g: Transmission,
    pub t_e: Transmission,
    pub cable_delay_samples: usize,
    pub gain: f64,
    /// Per-sample noise; when absent it is derived from `per_class_error`.
    pub noise_sigma: Option<f64>,
    pub per_class_error: f64,
    pub f_r_hz: f64,
    pub readout_amplitude: f64,
    pub reference_noise_sigma: f64,
    pub mid_readout_jumps: bool,
}

impl Default for ChannelFile {
    fn default() -> Self {
        let c = ChannelConfig::baseline_geometry();
        Self {
            t_g: c.t_g,
            t_e: c.t_e,
            cable_delay_samples: 17,
            gain: c.gain,
            noise_sigma: None,
            per_class_error: 0.005,
            f_r_hz: c.f_r,
            readout_amplitude: c.readout_amplitude,
            reference_noise_sigma: 0.0,
            mid_readout_jumps: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemodFile {
    pub f_if_hz: f64,
    pub window_ns: u64,
    pub delay_compensation_samples: usize,
}

impl Default for DemodFile {
    fn default() -> Self {
        Self { f_if_hz: 62.5e6, window_ns: 800, delay_compensation_samples: 17 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LatencyPreset {
    #[default]
    Default,
    Optimized,
    Zero,
}

/// A preset with optional per-stage overrides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyFile {
    pub preset: LatencyPreset,
    pub adc_ns: Option<u64>,
    pub decimation_ns: Option<u64>,
    pub demod_pipeline_ns: Option<u64>,
    pub decision_ns: Option<u64>,
    pub interpolation_ns: Option<u64>,
    pub dac_ns: Option<u64>,
}

impl LatencyFile {
    pub fn resolve(&self) -> LatencyModel {
        let base = match self.preset {
            LatencyPreset::Default => LatencyModel::baseline(),
            LatencyPreset::Optimized => LatencyModel::optimized(),
            LatencyPreset::Zero => LatencyModel::zero(),
        };
        LatencyModel {
            adc: self.adc_ns.unwrap_or(base.adc),
            decimation: self.decimation_ns.unwrap_or(base.decimation),
            demod_pipeline: self.demod_pipeline_ns.unwrap_or(base.demod_pipeline),
            decision: self.decision_ns.unwrap_or(base.decision),
            interpolation: self.interpolation_ns.unwrap_or(base.interpolation),
            dac: self.dac_ns.unwrap_or(base.dac),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Intercept {
    /// Log-odds of the qubit's equilibrium population.
    #[default]
    OperatingPrior,
    /// Log-odds of the training counts.
    SampleFrequency,
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationFile {
    pub intercept: Intercept,
    pub max_delay_samples: usize,
    /// Averaged readout traces in the cable-delay measurement.
    pub through_traces: usize,
}

impl Default for CalibrationFile {
    fn default() -> Self {
        Self { intercept: Intercept::default(), max_delay_samples: 64, through_traces: 256 }
    }
}

/// A validated configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub seed: u64,
    pub n_shots: usize,
    pub histogram_bins: usize,
    pub qubit: QubitParams,
    pub channel: ChannelConfig,
    pub demod: DemodConfig,
    pub latency: LatencyModel,
    pub intercept: InterceptMode,
    pub max_delay: usize,
    pub through_traces: usize,
    /// Whether the pi-pulse error and duration are the built-in defaults.
    pub pi_defaults: bool,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConfigFile = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn from_file(file: &ConfigFile) -> Result<Self> {
        if file.n_shots == 0 {
            return Err(CliError::Config("n_shots must be >= 1".into()));
        }
        if file.histogram_bins < 2 {
            return Err(CliError::Config("histogram_bins must be >= 2".into()));
        }
        if file.calibration.through_traces == 0 {
            return Err(CliError::Config("calibration.through_traces must be >= 1".into()));
        }

        let q = &file.qubit;
        let p1_eq = match (q.p1_eq, q.t_eff_mk) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give either qubit.p1_eq or qubit.t_eff_mk, not both".into()))
            }
            (Some(p), None) => p,
            (None, Some(t)) => thermal_population(q.f01_hz, t * 1e-3)?,
            (None, None) => QubitParams::baseline().p1_eq,
        };
        let qubit = QubitParams {
            f01: q.f01_hz,
            t1: q.t1_ns / 1e9,
            p1_eq,
            pi_error: q.pi_error,
            pi_duration: q.pi_duration_ns as f64 / 1e9,
        };
        qubit.validate()?;
        let defaults = QubitFile::default();
        let pi_defaults = q.pi_error == defaults.pi_error && q.pi_duration_ns == defaults.pi_duration_ns;

        let d = &file.demod;
        let demod = DemodConfig::new(d.f_if_hz, d.window_ns as f64 / 1e9, d.delay_compensation_samples)?;

        let c = &file.channel;
        let mut channel = ChannelConfig {
            t_g: c.t_g,
            t_e: c.t_e,
            cable_delay: c.cable_delay_samples,
            gain: c.gain,
            noise_sigma: c.noise_sigma.unwrap_or(0.0),
            f_r: c.f_r_hz,
            readout_amplitude: c.readout_amplitude,
            reference_noise_sigma: c.reference_noise_sigma,
            mid_readout_jumps: c.mid_readout_jumps,
        };
        channel.validate()?;
        if c.noise_sigma.is_none() {
            let ratio = separation_for_error(c.per_class_error)?;
            channel = channel.with_separation(ratio, &readout_pulse(&demod, channel.readout_amplitude), &demod)?;
        }

        let intercept = match file.calibration.intercept {
            Intercept::OperatingPrior => InterceptMode::Prior(p1_eq),
            Intercept::SampleFrequency => InterceptMode::SampleFrequency,
            Intercept::Midpoint => InterceptMode::Midpoint,
        };

        Ok(Self {
            seed: file.seed,
            n_shots: file.n_shots,
            histogram_bins: file.histogram_bins,
            qubit,
            channel,
            demod,
            latency: file.latency.resolve(),
            intercept,
            max_delay: file.calibration.max_delay_samples,
            through_traces: file.calibration.through_traces,
            pi_defaults,
        })
    }
}
