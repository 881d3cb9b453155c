//! Measurement channel at intermediate frequency.
//!
//! The readout tone is split in two: the reference branch reaches the
//! platform untouched, the signal branch picks up the state-dependent
//! steady-state transmission of the cavity, the cable delay, amplifier gain
//! and additive white Gaussian noise.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::demod::{demodulate, DemodConfig, IqPoint};
use crate::discriminate::BlobModel;
use crate::dsp::{same_rate, synth_pulse, PulseShape, SampleStream, PROCESSING_RATE};
use crate::error::{Error, Result};
use crate::physics::{QubitState, RngStream};
use crate::scalar::Real;

/// Complex transmission coefficient in polar form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub magnitude: f64,
    /// Radians.
    pub phase: f64,
}

impl Transmission {
    pub fn new(magnitude: f64, phase: f64) -> Self {
        Self { magnitude, phase }
    }

    pub fn to_complex(self) -> Complex<f64> {
        Complex::from_polar(self.magnitude, self.phase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub t_g: Transmission,
    pub t_e: Transmission,
    /// Signal-branch delay in processing-rate samples.
    pub cable_delay: usize,
    pub gain: f64,
    /// Per-sample standard deviation of the signal-branch noise.
    pub noise_sigma: f64,
    /// Resonator frequency in Hz. Metadata only; the model stays at IF.
    pub f_r: f64,
    /// Amplitude of the readout tone entering the split.
    pub readout_amplitude: f64,
    /// Optional noise on the reference branch (normally noiseless).
    pub reference_noise_sigma: f64,
    /// Allow a T1 jump inside the readout window instead of a strictly QND
    /// readout.
    pub mid_readout_jumps: bool,
}

impl ChannelConfig {
    /// Response geometry resembling the measured histograms, with the noise
    /// left at zero. Use [`ChannelConfig::with_separation`] to set the SNR.
    pub fn baseline_geometry() -> Self {
        Self {
            t_g: Transmission::new(1.0, 1.107),
            t_e: Transmission::new(0.887, 0.278),
            cable_delay: 0,
            gain: 1.0,
            noise_sigma: 0.0,
            f_r: 7.5e9,
            readout_amplitude: 1.0,
            reference_noise_sigma: 0.0,
            mid_readout_jumps: false,
        }
    }

    pub fn transmission(&self, state: QubitState) -> Transmission {
        match state {
            QubitState::Ground => self.t_g,
            QubitState::Excited => self.t_e,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("t_g", self.t_g), ("t_e", self.t_e)] {
            if !(t.magnitude > 0.0 && t.magnitude <= 1.0) || !t.phase.is_finite() {
                return Err(Error::config(format!("{name} magnitude must be in (0, 1], got {}", t.magnitude)));
            }
        }
        if self.t_g.to_complex() == self.t_e.to_complex() {
            return Err(Error::config("t_g and t_e are identical; states would be indistinguishable"));
        }
        if !(self.gain > 0.0) {
            return Err(Error::config(format!("gain must be > 0, got {}", self.gain)));
        }
        if !(self.noise_sigma >= 0.0) || !(self.reference_noise_sigma >= 0.0) {
            return Err(Error::config("noise standard deviations must be >= 0"));
        }
        if !(self.readout_amplitude >= 0.0) {
            return Err(Error::config("readout amplitude must be >= 0"));
        }
        Ok(())
    }

    /// Sets `noise_sigma` so that the blob separation over the blob width,
    /// `|mu_e - mu_g| / sigma`, equals `ratio` for the given readout.
    pub fn with_separation(self, ratio: f64, pulse: &PulseShape, demod: &DemodConfig) -> Result<Self> {
        if !(ratio > 0.0) {
            return Err(Error::config("separation ratio must be > 0"));
        }
        let unit = Self { noise_sigma: 1.0, ..self };
        let m = blob_model::<f64>(&unit, pulse, demod)?;
        let separation = m.mu_e.sub(&m.mu_g).norm();
        Ok(Self { noise_sigma: separation / (ratio * m.sigma), ..self })
    }
}

/// Signal and reference branches as digitized by the platform.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPair<T = f64> {
    pub signal: SampleStream<T>,
    pub reference: SampleStream<T>,
}

impl<T: Real> BranchPair<T> {
    pub fn new(signal: SampleStream<T>, reference: SampleStream<T>) -> Result<Self> {
        if !same_rate(signal.sample_rate(), reference.sample_rate()) {
            return Err(Error::RateMismatch {
                expected: reference.sample_rate(),
                actual: signal.sample_rate(),
            });
        }
        Ok(Self { signal, reference })
    }
}

/// A state change part-way through the readout tone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Jump {
    /// Index into the readout pulse where the new state takes over.
    pub at_sample: usize,
    pub to: QubitState,
}

/// Noiseless branch templates for one readout pulse, precomputed so that a
/// shot only has to draw noise.
#[derive(Debug, Clone)]
pub struct ReadoutChannel<T = f64> {
    cfg: ChannelConfig,
    reference: SampleStream<T>,
    signal_g: Vec<T>,
    signal_e: Vec<T>,
}

impl<T: Real> ReadoutChannel<T> {
    pub fn new(cfg: &ChannelConfig, pulse: &PulseShape) -> Result<Self> {
        cfg.validate()?;
        let reference = synth_pulse::<T>(pulse, PROCESSING_RATE)?;
        let branch = |t: Transmission| -> Result<Vec<T>> {
            let shaped = PulseShape {
                amplitude: pulse.amplitude * cfg.gain * t.magnitude,
                phase: pulse.phase + t.phase,
                ..*pulse
            };
            Ok(synth_pulse::<T>(&shaped, PROCESSING_RATE)?.delayed(cfg.cable_delay).into_samples())
        };
        Ok(Self {
            cfg: *cfg,
            signal_g: branch(cfg.t_g)?,
            signal_e: branch(cfg.t_e)?,
            reference,
        })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    pub fn reference(&self) -> &SampleStream<T> {
        &self.reference
    }

    /// Noiseless signal branch for `state`.
    pub fn template(&self, state: QubitState) -> &[T] {
        match state {
            QubitState::Ground => &self.signal_g,
            QubitState::Excited => &self.signal_e,
        }
    }

    pub fn shot(&self, state: QubitState, rng: &mut RngStream) -> BranchPair<T> {
        self.shot_with_jump(state, None, rng)
    }

    /// One noisy shot. Noise is drawn for every signal sample in ascending
    /// order, then for the reference if it is noisy.
    pub fn shot_with_jump(&self, state: QubitState, jump: Option<Jump>, rng: &mut RngStream) -> BranchPair<T> {
        let before = self.template(state);
        let split = match jump {
            Some(j) => self.cfg.cable_delay + j.at_sample,
            None => before.len(),
        };
        let after = jump.map_or(before, |j| self.template(j.to));
        let sigma = self.cfg.noise_sigma;
        let signal: Vec<T> = (0..before.len())
            .map(|k| {
                let clean = if k < split { before[k] } else { after[k] };
                if sigma > 0.0 {
                    clean + T::lit(sigma * rng.standard_normal())
                } else {
                    clean
                }
            })
            .collect();
        let rate = self.reference.sample_rate();
        let rs = self.cfg.reference_noise_sigma;
        let reference = if rs > 0.0 {
            let noisy = self.reference.samples().iter().map(|&r| r + T::lit(rs * rng.standard_normal())).collect();
            SampleStream::new(noisy, rate).expect("rate already validated")
        } else {
            self.reference.clone()
        };
        BranchPair {
            signal: SampleStream::new(signal, rate).expect("rate already validated"),
            reference,
        }
    }
}

/// Passes `pulse` through the channel for a qubit held in `state`.
pub fn transmit<T: Real>(
    cfg: &ChannelConfig,
    state: QubitState,
    pulse: &PulseShape,
    rng: &mut RngStream,
) -> Result<BranchPair<T>> {
    Ok(ReadoutChannel::new(cfg, pulse)?.shot(state, rng))
}

/// Analytic blob geometry of the integrated readout.
///
/// The means are the noiseless demodulated points. Each noise sample `n_k`
/// enters I as `n_k * ref_k`, so the per-axis standard deviation is
/// `noise_sigma * sqrt(sum_k ref_k^2) = noise_sigma * sqrt(N * P_ref)` with
/// `P_ref` the mean reference power over the window (`A^2 / 2` for a
/// whole-period rectangular tone). The returned prior is 0.5.
pub fn blob_model<T: Real>(cfg: &ChannelConfig, pulse: &PulseShape, demod: &DemodConfig) -> Result<BlobModel<T>> {
    let n = demod.window_samples()?;
    let pulse_samples = crate::dsp::sample_count(pulse.duration, PROCESSING_RATE)?;
    if n > pulse_samples {
        return Err(Error::config(format!(
            "window of {n} samples exceeds the {pulse_samples}-sample readout pulse"
        )));
    }
    let quiet = ChannelConfig { noise_sigma: 0.0, reference_noise_sigma: 0.0, ..*cfg };
    let chan = ReadoutChannel::<T>::new(&quiet, pulse)?;
    let mut rng = RngStream::new(0, 0);
    let mu_g = demodulate(&chan.shot(QubitState::Ground, &mut rng), demod)?;
    let mu_e = demodulate(&chan.shot(QubitState::Excited, &mut rng), demod)?;
    let ref_energy: T = chan.reference().samples()[..n].iter().map(|&r| r * r).sum();
    let sigma = T::lit(cfg.noise_sigma) * ref_energy.sqrt();
    BlobModel::new(mu_g, mu_e, sigma, T::lit(0.5))
}

/// Demodulated noiseless response for one state.
pub fn noiseless_response<T: Real>(
    cfg: &ChannelConfig,
    state: QubitState,
    pulse: &PulseShape,
    demod: &DemodConfig,
) -> Result<IqPoint<T>> {
    let quiet = ChannelConfig { noise_sigma: 0.0, reference_noise_sigma: 0.0, ..*cfg };
    let mut rng = RngStream::new(0, 0);
    demodulate(&transmit::<T>(&quiet, state, pulse, &mut rng)?, demod)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demod::{calibrate_delay, phase_amplitude};
    use std::f64::consts::FRAC_PI_2;

    fn readout() -> PulseShape {
        PulseShape::rectangular(62.5e6, 0.0, 1.0, 816e-9)
    }

    fn quiet() -> ChannelConfig {
        ChannelConfig::baseline_geometry()
    }

    #[test]
    fn identity_channel_copies_reference() {
        let cfg = ChannelConfig { t_g: Transmission::new(1.0, 0.0), ..quiet() };
        let mut rng = RngStream::new(1, 1);
        let p = transmit::<f64>(&cfg, QubitState::Ground, &readout(), &mut rng).unwrap();
        assert_eq!(p.signal, p.reference);
    }

    #[test]
    fn quadrature_transmission_rotates_iq_by_90_degrees() {
        let cfg = ChannelConfig {
            t_g: Transmission::new(0.8, 0.3),
            t_e: Transmission::new(0.8, 0.3 + FRAC_PI_2),
            ..quiet()
        };
        let demod = DemodConfig::baseline();
        let g = noiseless_response::<f64>(&cfg, QubitState::Ground, &readout(), &demod).unwrap();
        let e = noiseless_response::<f64>(&cfg, QubitState::Excited, &readout(), &demod).unwrap();
        let rotated = g.rotated(FRAC_PI_2);
        assert!((e.i - rotated.i).abs() < 1e-9 && (e.q - rotated.q).abs() < 1e-9, "{e:?} vs {rotated:?}");
    }

    #[test]
    fn phase_difference_matches_transmission() {
        let cfg = quiet();
        let demod = DemodConfig::baseline();
        let (_, pg) = phase_amplitude(noiseless_response::<f64>(&cfg, QubitState::Ground, &readout(), &demod).unwrap());
        let (_, pe) = phase_amplitude(noiseless_response::<f64>(&cfg, QubitState::Excited, &readout(), &demod).unwrap());
        assert!(((pe - pg) - (cfg.t_e.phase - cfg.t_g.phase)).abs() < 1e-9);
    }

    #[test]
    fn cable_delay_is_recovered_exactly() {
        for d in [0usize, 3, 17, 40] {
            let cfg = ChannelConfig { cable_delay: d, ..quiet() };
            let mut rng = RngStream::new(0, 0);
            let p = transmit::<f64>(&cfg, QubitState::Excited, &readout(), &mut rng).unwrap();
            assert_eq!(p.signal.len(), p.reference.len() + d);
            assert_eq!(calibrate_delay(&p, 64).unwrap(), d);
        }
    }

    #[test]
    fn transmit_commutes_with_amplitude_scaling() {
        let cfg = quiet();
        let mut rng = RngStream::new(0, 0);
        let a = transmit::<f64>(&cfg, QubitState::Excited, &readout(), &mut rng).unwrap();
        let b = transmit::<f64>(&cfg, QubitState::Excited, &readout().with_amplitude(2.5), &mut rng).unwrap();
        for (x, y) in a.signal.samples().iter().zip(b.signal.samples()) {
            assert!((2.5 * x - y).abs() <= 1e-12 * y.abs().max(1e-12));
        }
    }

    #[test]
    fn blob_model_noise_scaling() {
        let demod = DemodConfig::baseline();
        let m0 = blob_model::<f64>(&quiet(), &readout(), &demod).unwrap();
        assert_eq!(m0.sigma, 0.0);
        let g = noiseless_response::<f64>(&quiet(), QubitState::Ground, &readout(), &demod).unwrap();
        assert_eq!(m0.mu_g, g);
        let m1 = blob_model::<f64>(&ChannelConfig { noise_sigma: 0.5, ..quiet() }, &readout(), &demod).unwrap();
        let m2 = blob_model::<f64>(&ChannelConfig { noise_sigma: 1.0, ..quiet() }, &readout(), &demod).unwrap();
        assert!((m2.sigma - 2.0 * m1.sigma).abs() < 1e-12);
        assert_eq!(m1.mu_g, m2.mu_g);
        assert_eq!(m1.mu_e, m2.mu_e);
        // whole-period unit tone: sigma = noise * sqrt(N / 2)
        assert!((m2.sigma - 200f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn separation_sets_noise() {
        let demod = DemodConfig::baseline();
        let cfg = quiet().with_separation(5.1517, &readout(), &demod).unwrap();
        let m = blob_model::<f64>(&cfg, &readout(), &demod).unwrap();
        let ratio = m.mu_e.sub(&m.mu_g).norm() / m.sigma;
        assert!((ratio - 5.1517).abs() < 1e-9);
    }

    #[test]
    fn invalid_configs() {
        let same = ChannelConfig { t_e: quiet().t_g, ..quiet() };
        assert!(same.validate().is_err());
        assert!(ChannelConfig { gain: 0.0, ..quiet() }.validate().is_err());
        assert!(ChannelConfig { noise_sigma: -1.0, ..quiet() }.validate().is_err());
        assert!(ChannelConfig { t_g: Transmission::new(1.2, 0.0), ..quiet() }.validate().is_err());
        let demod = DemodConfig::baseline();
        let short = PulseShape::rectangular(62.5e6, 0.0, 1.0, 400e-9);
        assert!(blob_model::<f64>(&quiet(), &short, &demod).is_err());
    }

    #[test]
    fn jump_switches_template_mid_pulse() {
        let cfg = ChannelConfig { cable_delay: 5, ..quiet() };
        let chan = ReadoutChannel::<f64>::new(&cfg, &readout()).unwrap();
        let mut rng = RngStream::new(0, 0);
        let jump = Jump { at_sample: 100, to: QubitState::Ground };
        let p = chan.shot_with_jump(QubitState::Excited, Some(jump), &mut rng);
        let s = p.signal.samples();
        assert_eq!(&s[..105], &chan.template(QubitState::Excited)[..105]);
        assert_eq!(&s[105..], &chan.template(QubitState::Ground)[105..]);
    }
}
