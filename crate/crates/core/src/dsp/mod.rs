//! Waveform synthesis at intermediate frequency and rate conversion between
//! the converter domain (4 GSa/s) and the processing domain (500 MSa/s).

mod resample;

pub use resample::{bessel_i0, RateConverter};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sample rate of the processing fabric (125 MHz clock, four samples per cycle).
pub const PROCESSING_RATE: f64 = 500e6;
/// Sample rate of the data converters.
pub const CONVERTER_RATE: f64 = 4e9;
/// One processing-rate sample, in nanoseconds.
pub const TICK_NS: u64 = 2;

const RATE_TOLERANCE: f64 = 1e-9;

pub(crate) fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() <= RATE_TOLERANCE * a.abs().max(b.abs())
}

/// Converts a duration to a whole number of samples, rejecting fractional counts.
pub fn sample_count(duration: f64, sample_rate: f64) -> Result<usize> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::config(format!("duration must be finite and >= 0, got {duration}")));
    }
    let exact = duration * sample_rate;
    let rounded = exact.round();
    if (exact - rounded).abs() > 1e-6 * exact.max(1.0) {
        return Err(Error::config(format!(
            "duration {duration} s is {exact} samples at {sample_rate} Sa/s, not an integer"
        )));
    }
    Ok(rounded as usize)
}

/// A finite run of real samples at an explicit rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream<T = f64> {
    samples: Vec<T>,
    sample_rate: f64,
}

impl<T: Real> SampleStream<T> {
    pub fn new(samples: Vec<T>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::config(format!("sample_rate must be > 0, got {sample_rate}")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![T::zero(); len], sample_rate)
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [T] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds, `len / sample_rate`.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Prepends `n` zero samples.
    pub fn delayed(&self, n: usize) -> Self {
        let mut samples = vec![T::zero(); n];
        samples.extend_from_slice(&self.samples);
        Self { samples, sample_rate: self.sample_rate }
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            samples: self.samples.iter().map(|&x| x * c).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Sample-wise sum; the shorter stream is zero-extended.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if !same_rate(self.sample_rate, other.sample_rate) {
            return Err(Error::RateMismatch {
                expected: self.sample_rate,
                actual: other.sample_rate,
            });
        }
        let n = self.len().max(other.len());
        let at = |s: &[T], k: usize| s.get(k).copied().unwrap_or_else(T::zero);
        let samples = (0..n).map(|k| at(&self.samples, k) + at(&other.samples, k)).collect();
        Ok(Self { samples, sample_rate: self.sample_rate })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    Rectangular,
    /// Flat top with Gaussian ramps of length `rise` seconds at both ends.
    GaussianFlattop { rise: f64 },
}

impl Envelope {
    /// Envelope value at time `t` into a pulse of length `duration`.
    pub fn at(&self, t: f64, duration: f64) -> f64 {
        match *self {
            Envelope::Rectangular => 1.0,
            Envelope::GaussianFlattop { rise } => {
                // 3 sigma ramp: the edge starts at exp(-4.5) of full scale
                let sigma = rise / 3.0;
                let edge = if t < rise {
                    rise - t
                } else if t > duration - rise {
                    t - (duration - rise)
                } else {
                    return 1.0;
                };
                (-0.5 * (edge / sigma).powi(2)).exp()
            }
        }
    }
}

/// Description of one IF pulse. Frequencies in Hz, times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    pub frequency: f64,
    pub phase: f64,
    pub amplitude: f64,
    pub duration: f64,
    pub envelope: Envelope,
}

impl PulseShape {
    pub fn rectangular(frequency: f64, phase: f64, amplitude: f64, duration: f64) -> Self {
        Self { frequency, phase, amplitude, duration, envelope: Envelope::Rectangular }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) {
            return Err(Error::config(format!("amplitude must be >= 0, got {}", self.amplitude)));
        }
        if !self.frequency.is_finite() || !self.phase.is_finite() {
            return Err(Error::config("frequency and phase must be finite"));
        }
        sample_count(self.duration, PROCESSING_RATE)?;
        if let Envelope::GaussianFlattop { rise } = self.envelope {
            if !(rise > 0.0) || 2.0 * rise > self.duration {
                return Err(Error::config(format!(
                    "gaussian-flattop rise {rise} s must be > 0 and at most half of {} s",
                    self.duration
                )));
            }
        }
        Ok(())
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        Self { amplitude, ..self }
    }

    pub fn with_phase(self, phase: f64) -> Self {
        Self { phase, ..self }
    }

    pub fn with_duration(self, duration: f64) -> Self {
        Self { duration, ..self }
    }
}

fn check_synth_rate(sample_rate: f64) -> Result<()> {
    if same_rate(sample_rate, PROCESSING_RATE) || same_rate(sample_rate, CONVERTER_RATE) {
        Ok(())
    } else {
        Err(Error::config(format!(
            "pulses are synthesized at {PROCESSING_RATE} or {CONVERTER_RATE} Sa/s, not {sample_rate}"
        )))
    }
}

/// Renders `shape` as `A * env(t) * cos(2 pi f t + phi)` sampled at `sample_rate`.
pub fn synth_pulse<T: Real>(shape: &PulseShape, sample_rate: f64) -> Result<SampleStream<T>> {
    shape.validate()?;
    check_synth_rate(sample_rate)?;
    let n = sample_count(shape.duration, sample_rate)?;
    let omega = std::f64::consts::TAU * shape.frequency / sample_rate;
    let samples = (0..n)
        .map(|k| {
            let t = k as f64 / sample_rate;
            let v = shape.amplitude
                * shape.envelope.at(t, shape.duration)
                * (omega * k as f64 + shape.phase).cos();
            T::lit(v)
        })
        .collect();
    SampleStream::new(samples, sample_rate)
}
