//! Readout calibration: cable-delay check on a through measurement, then
//! an LDA discriminant trained on shots prepared alternately in g and e.

use qfsim_core::channel::{blob_model, ReadoutChannel};
use qfsim_core::demod::{calibrate_delay, demodulate};
use qfsim_core::discriminate::{bayes_error, classify, train_lda_with};
use qfsim_core::sequencer::readout_pulse;
use qfsim_core::{
    BlobModel, BranchPair, Discriminant, IqPoint, QubitState, RateConverter, RngStream, SampleStream,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Experiment;
use crate::error::{CliError, Result};
use crate::STREAM_CALIBRATION;

/// Stream ids of the through measurement, disjoint from all shot streams.
const STREAM_THROUGH: u64 = 1 << 61;

#[derive(Debug, Clone, Serialize)]
pub struct BlobSummary {
    pub mu_g: IqPoint<f64>,
    pub mu_e: IqPoint<f64>,
    pub sigma: f64,
    pub separation_over_sigma: Option<f64>,
    pub bayes_error: f64,
}

impl BlobSummary {
    fn new(m: &BlobModel<f64>) -> Self {
        let d = m.separation();
        Self {
            mu_g: m.mu_g,
            mu_e: m.mu_e,
            sigma: m.sigma,
            separation_over_sigma: (m.sigma > 0.0).then(|| d / m.sigma),
            bayes_error: bayes_error(m),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConverterSummary {
    pub factor: usize,
    pub taps: usize,
    pub group_delay_ns: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub n_shots: usize,
    pub seed: u64,
    pub measured_cable_delay_samples: usize,
    pub delay_compensation_samples: usize,
    /// Means and pooled width of the training shots; `bayes_error` at equal priors.
    pub empirical: BlobSummary,
    /// Closed-form blob geometry of the configured channel.
    pub analytic: BlobSummary,
    pub training_error_g_as_e: f64,
    pub training_error_e_as_g: f64,
    pub discriminant: Discriminant<f64>,
    pub converter: ConverterSummary,
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub discriminant: Discriminant<f64>,
    pub report: CalibrationReport,
}

/// Delay of the signal branch measured with the cavity bypassed: averaged
/// readout tones through the cable, gain and amplifier noise only.
pub fn measure_cable_delay(exp: &Experiment) -> Result<usize> {
    let pulse = readout_pulse(&exp.demod, exp.channel.readout_amplitude);
    let chan = ReadoutChannel::<f64>::new(&exp.channel, &pulse)?;
    let reference = chan.reference();
    let clean = reference.delayed(exp.channel.cable_delay).scaled(exp.channel.gain);
    let sigma = exp.channel.noise_sigma;
    let n = exp.through_traces;
    let mut sum = vec![0.0; clean.len()];
    for j in 0..n {
        let mut rng = RngStream::new(exp.seed, STREAM_THROUGH + j as u64);
        for (acc, &x) in sum.iter_mut().zip(clean.samples()) {
            *acc += x + sigma * rng.standard_normal();
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
    let pair = BranchPair::new(SampleStream::new(mean, reference.sample_rate())?, reference.clone())?;
    let max_delay = exp.max_delay.min(pair.signal.len() - 1);
    Ok(calibrate_delay(&pair, max_delay)?)
}

/// Demodulated training shots, alternating g (even index) and e (odd).
pub fn training_shots(exp: &Experiment) -> Result<Vec<(IqPoint<f64>, QubitState)>> {
    let pulse = readout_pulse(&exp.demod, exp.channel.readout_amplitude);
    let chan = ReadoutChannel::<f64>::new(&exp.channel, &pulse)?;
    (0..exp.n_shots)
        .into_par_iter()
        .map(|k| {
            let state = if k % 2 == 0 { QubitState::Ground } else { QubitState::Excited };
            let mut rng = RngStream::new(exp.seed, STREAM_CALIBRATION + k as u64);
            Ok((demodulate(&chan.shot(state, &mut rng), &exp.demod)?, state))
        })
        .collect()
}

fn empirical_blobs(shots: &[(IqPoint<f64>, QubitState)]) -> Result<BlobModel<f64>> {
    // deviations from each class's first point keep identical shots at exactly zero scatter
    let origin = |state: QubitState| shots.iter().find(|(_, s)| *s == state).map(|(p, _)| *p);
    let origins = [origin(QubitState::Ground), origin(QubitState::Excited)];
    let mut sums = [(0.0, 0.0, 0usize); 2];
    for (p, s) in shots {
        let o = origins[s.index()].expect("class is present");
        let e = &mut sums[s.index()];
        e.0 += p.i - o.i;
        e.1 += p.q - o.q;
        e.2 += 1;
    }
    let offset = |k: usize| IqPoint::new(sums[k].0 / sums[k].2 as f64, sums[k].1 / sums[k].2 as f64);
    let scatter: f64 = shots
        .iter()
        .map(|(p, s)| {
            let (o, m) = (origins[s.index()].expect("class is present"), offset(s.index()));
            (p.i - o.i - m.i).powi(2) + (p.q - o.q - m.q).powi(2)
        })
        .sum();
    let mean = |k: usize| origins[k].expect("class is present").add(&offset(k));
    // two axes, two fitted means
    let dof = 2 * (shots.len() - 2);
    Ok(BlobModel::new(mean(0), mean(1), (scatter / dof as f64).sqrt(), 0.5)?)
}

pub fn cmd_calibrate(exp: &Experiment) -> Result<Calibration> {
    let measured = measure_cable_delay(exp)?;
    if measured != exp.demod.delay_compensation {
        return Err(CliError::Calibration(format!(
            "through measurement puts the cable delay at {measured} samples, \
             but delay_compensation is {}",
            exp.demod.delay_compensation
        )));
    }

    let shots = training_shots(exp)?;
    let discriminant = train_lda_with(&shots, exp.intercept)?;

    let (mut g_as_e, mut e_as_g, mut n_g, mut n_e) = (0usize, 0usize, 0usize, 0usize);
    for (p, s) in &shots {
        let wrong = classify(&discriminant, p) != *s;
        if s.is_excited() {
            n_e += 1;
            e_as_g += wrong as usize;
        } else {
            n_g += 1;
            g_as_e += wrong as usize;
        }
    }

    let pulse = readout_pulse(&exp.demod, exp.channel.readout_amplitude);
    let analytic = blob_model::<f64>(&exp.channel, &pulse, &exp.demod)?;
    let conv = RateConverter::<f64>::platform();
    let report = CalibrationReport {
        n_shots: exp.n_shots,
        seed: exp.seed,
        measured_cable_delay_samples: measured,
        delay_compensation_samples: exp.demod.delay_compensation,
        empirical: BlobSummary::new(&empirical_blobs(&shots)?),
        analytic: BlobSummary::new(&analytic),
        training_error_g_as_e: g_as_e as f64 / n_g as f64,
        training_error_e_as_g: e_as_g as f64 / n_e as f64,
        discriminant,
        converter: ConverterSummary {
            factor: conv.factor(),
            taps: conv.taps().len(),
            group_delay_ns: conv.group_delay() * 1e9,
        },
    };
    Ok(Calibration { discriminant, report })
}
