//! Active-reset experiment: thermal qubit, measure-and-flip program, then a
//! verification readout of the state left behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use qfsim_core::channel::blob_model;
use qfsim_core::discriminate::estimate_populations;
use qfsim_core::physics::effective_temperature;
use qfsim_core::sequencer::{active_reset_program, readout_pulse, ShotEngine};
use qfsim_core::{Discriminant, IqPoint, LatencyModel, QubitState, RngStream, ShotRecord};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Experiment;
use crate::error::{CliError, Result};

/// Shots are executed in blocks of this size so the shot log can be
/// streamed while results stay ordered by shot index.
const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Populations {
    /// Fraction of shots whose simulated state is excited.
    pub truth: f64,
    /// Fraction of shots the discriminant labels excited.
    pub classified: f64,
    /// Excited weight of the two-blob mixture fitted to the IQ points.
    pub mixture: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LatencyBreakdown {
    #[serde(flatten)]
    pub stages: LatencyModel,
    pub total_ns: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PiPulseInfo {
    pub pi_error: f64,
    pub pi_duration_ns: f64,
    /// The pulse error and duration are built-in assumptions rather than
    /// values taken from the configuration.
    pub assumed_defaults: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResetReport {
    pub n_shots: usize,
    pub seed: u64,
    pub p1_before: Populations,
    pub p1_after: Populations,
    pub fidelity: f64,
    /// Kelvin, from the mixture estimates; null when the population has no
    /// positive-temperature solution.
    pub t_eff_before_k: Option<f64>,
    pub t_eff_after_k: Option<f64>,
    pub sequence_duration_s: f64,
    pub latency_breakdown: LatencyBreakdown,
    pub pi_pulse: PiPulseInfo,
    pub discriminant: Discriminant<f64>,
}

/// The reset shot followed by the verification readout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResetShot {
    pub shot: u64,
    #[serde(flatten)]
    pub record: ShotRecord<f64>,
    pub verify_iq: IqPoint<f64>,
    pub verify_decision: QubitState,
}

#[derive(Debug, Clone)]
pub struct ResetOutcome {
    pub report: ResetReport,
    pub histogram_before: String,
    pub histogram_after: String,
}

/// Square 2-D histogram rendered as CSV, bins in i-major order.
pub fn histogram_csv(points: &[IqPoint<f64>], bins: usize) -> String {
    let range = |f: fn(&IqPoint<f64>) -> f64| {
        let (lo, hi) = points.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        let span = hi - lo;
        let pad = if span > 0.0 { 0.05 * span } else { 0.5 };
        (lo - pad, (span + 2.0 * pad) / bins as f64)
    };
    let (i0, wi) = range(|p| p.i);
    let (q0, wq) = range(|p| p.q);
    let index = |v: f64, lo: f64, w: f64| (((v - lo) / w) as usize).min(bins - 1);
    let mut counts = vec![0u64; bins * bins];
    for p in points {
        counts[index(p.i, i0, wi) * bins + index(p.q, q0, wq)] += 1;
    }
    let mut out = String::from("i_bin_center,q_bin_center,count\n");
    for a in 0..bins {
        let ci = i0 + (a as f64 + 0.5) * wi;
        for b in 0..bins {
            let cq = q0 + (b as f64 + 0.5) * wq;
            writeln!(out, "{ci},{cq},{}", counts[a * bins + b]).expect("writing to a String cannot fail");
        }
    }
    out
}

fn populations(
    states: impl Iterator<Item = QubitState>,
    decisions: impl Iterator<Item = QubitState>,
    points: &[IqPoint<f64>],
    blobs: &qfsim_core::BlobModel<f64>,
) -> Result<Populations> {
    let n = points.len() as f64;
    Ok(Populations {
        truth: states.filter(|s| s.is_excited()).count() as f64 / n,
        classified: decisions.filter(|s| s.is_excited()).count() as f64 / n,
        mixture: estimate_populations(points, blobs)?.1,
    })
}

/// Receives every shot in index order.
pub type ShotSink<'a> = &'a mut dyn FnMut(&ResetShot) -> Result<()>;

/// Runs the experiment; `log` receives each shot in index order.
pub fn run_reset(
    exp: &Experiment,
    disc: &Discriminant<f64>,
    mut log: Option<ShotSink<'_>>,
) -> Result<ResetOutcome> {
    let window_ns = (exp.demod.window * 1e9).round() as u64;
    let engine = ShotEngine::new(
        &active_reset_program(window_ns),
        &exp.qubit,
        &exp.channel,
        &exp.demod,
        disc,
        &exp.latency,
    )?;

    let n = exp.n_shots;
    let mut before = Vec::with_capacity(n);
    let mut after = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    let mut decided = Vec::with_capacity(n);
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let shots: Vec<ResetShot> = (start..end)
            .into_par_iter()
            .map(|k| {
                let mut rng = RngStream::new(exp.seed, k as u64);
                let record = engine.run(&mut rng)?;
                let verify = engine.readout(record.final_state, &mut rng)?;
                Ok(ResetShot { shot: k as u64, record, verify_iq: verify.iq, verify_decision: verify.decision })
            })
            .collect::<Result<_>>()?;
        for s in &shots {
            let iq = s.record.iq.ok_or_else(|| CliError::Runtime("reset program took no readout".into()))?;
            let decision = s.record.decision.unwrap_or(QubitState::Ground);
            before.push(iq);
            after.push(s.verify_iq);
            truth.push((s.record.initial_state, s.record.final_state));
            decided.push((decision, s.verify_decision));
            if let Some(f) = log.as_mut() {
                f(s)?;
            }
        }
    }

    let pulse = readout_pulse(&exp.demod, exp.channel.readout_amplitude);
    let blobs = blob_model::<f64>(&exp.channel, &pulse, &exp.demod)?;
    let p1_before = populations(truth.iter().map(|t| t.0), decided.iter().map(|d| d.0), &before, &blobs)?;
    let p1_after = populations(truth.iter().map(|t| t.1), decided.iter().map(|d| d.1), &after, &blobs)?;
    let t_eff = |p: f64| effective_temperature(p, exp.qubit.f01).ok();

    let report = ResetReport {
        n_shots: n,
        seed: exp.seed,
        p1_before,
        p1_after,
        fidelity: 1.0 - p1_after.truth,
        t_eff_before_k: t_eff(p1_before.mixture),
        t_eff_after_k: t_eff(p1_after.mixture),
        sequence_duration_s: engine.schedule().duration_ns() as f64 * 1e-9,
        latency_breakdown: LatencyBreakdown { stages: exp.latency, total_ns: exp.latency.total_ns() },
        pi_pulse: PiPulseInfo {
            pi_error: exp.qubit.pi_error,
            pi_duration_ns: exp.qubit.pi_duration * 1e9,
            assumed_defaults: exp.pi_defaults,
        },
        discriminant: *disc,
    };
    Ok(ResetOutcome {
        report,
        histogram_before: histogram_csv(&before, exp.histogram_bins),
        histogram_after: histogram_csv(&after, exp.histogram_bins),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::write(path, e))
}

/// Runs the experiment and writes `report.json`, the two histograms and,
/// if requested, `shots.ndjson` into `out_dir`.
pub fn cmd_reset(exp: &Experiment, disc: &Discriminant<f64>, out_dir: &Path, shot_log: bool) -> Result<ResetReport> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::write(out_dir, e))?;
    let log_path: PathBuf = out_dir.join("shots.ndjson");
    let outcome = if shot_log {
        let file = std::fs::File::create(&log_path).map_err(|e| CliError::write(&log_path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let mut sink = |s: &ResetShot| -> Result<()> {
            serde_json::to_writer(&mut w, s).map_err(|e| CliError::write(&log_path, e))?;
            w.write_all(b"\n").map_err(|e| CliError::write(&log_path, e))
        };
        let outcome = run_reset(exp, disc, Some(&mut sink))?;
        w.flush().map_err(|e| CliError::write(&log_path, e))?;
        outcome
    } else {
        run_reset(exp, disc, None)?
    };
    let report = serde_json::to_string_pretty(&outcome.report).expect("report serializes") + "\n";
    write_file(&out_dir.join("report.json"), &report)?;
    write_file(&out_dir.join("histogram_before.csv"), &outcome.histogram_before)?;
    write_file(&out_dir.join("histogram_after.csv"), &outcome.histogram_after)?;
    Ok(outcome.report)
}
