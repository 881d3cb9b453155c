//! Digital downconversion of the signal branch against the reference branch.
//!
//! The reference is aligned to the signal by a whole-sample delay found at
//! calibration time. I is the point-wise product of signal and reference
//! summed over the window; Q uses the reference advanced by a quarter carrier
//! period, which stands in for the imaginary part of its analytic signal.
//! Sums are raw (no normalization) and always run in ascending sample order.

use serde::{Deserialize, Serialize};

use crate::channel::BranchPair;
use crate::dsp::{sample_count, same_rate, PROCESSING_RATE};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One integrated readout shot in the IQ plane (arbitrary units).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IqPoint<T = f64> {
    pub i: T,
    pub q: T,
}

impl<T: Real> IqPoint<T> {
    pub fn new(i: T, q: T) -> Self {
        Self { i, q }
    }

    pub fn is_finite(&self) -> bool {
        self.i.is_finite() && self.q.is_finite()
    }

    pub fn dot(&self, other: &Self) -> T {
        self.i * other.i + self.q * other.q
    }

    pub fn norm(&self) -> T {
        self.i.hypot(self.q)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.i - other.i, self.q - other.q)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.i + other.i, self.q + other.q)
    }

    pub fn scale(&self, c: T) -> Self {
        Self::new(self.i * c, self.q * c)
    }

    /// Rotates counter-clockwise about the origin by `angle` radians.
    pub fn rotated(&self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.i - s * self.q, s * self.i + c * self.q)
    }
}

/// Amplitude and phase of an IQ point; the origin maps to `(0, 0)`.
pub fn phase_amplitude<T: Real>(p: IqPoint<T>) -> (T, T) {
    if p.i == T::zero() && p.q == T::zero() {
        return (T::zero(), T::zero());
    }
    (p.norm(), p.q.atan2(p.i))
}

/// Quarter carrier period in samples, `sample_rate / (4 f_if)`, which must be
/// an integer to within 1e-9 relative.
pub fn quarter_period_samples(f_if: f64, sample_rate: f64) -> Result<usize> {
    if !(f_if > 0.0) || !(sample_rate > 0.0) {
        return Err(Error::config(format!(
            "need f_if > 0 and sample_rate > 0, got {f_if} Hz and {sample_rate} Sa/s"
        )));
    }
    let exact = sample_rate / (4.0 * f_if);
    let rounded = exact.round();
    if rounded < 1.0 || (exact - rounded).abs() > 1e-9 * exact {
        return Err(Error::config(format!(
            "quarter period at {f_if} Hz is {exact} samples, not a whole number"
        )));
    }
    Ok(rounded as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemodConfig {
    pub f_if: f64,
    /// Integration length in seconds.
    pub window: f64,
    pub delay_compensation: usize,
    pub quarter_shift: usize,
    pub sample_rate: f64,
}

impl DemodConfig {
    pub fn new(f_if: f64, window: f64, delay_compensation: usize) -> Result<Self> {
        Self::with_rate(f_if, window, delay_compensation, PROCESSING_RATE)
    }

    pub fn with_rate(f_if: f64, window: f64, delay_compensation: usize, sample_rate: f64) -> Result<Self> {
        let cfg = Self {
            f_if,
            window,
            delay_compensation,
            quarter_shift: quarter_period_samples(f_if, sample_rate)?,
            sample_rate,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 62.5 MHz IF, 800 ns window, no delay.
    pub fn baseline() -> Self {
        Self::new(62.5e6, 800e-9, 0).expect("default demodulation parameters are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let q = quarter_period_samples(self.f_if, self.sample_rate)?;
        if q != self.quarter_shift {
            return Err(Error::config(format!(
                "quarter_shift {} does not match the quarter period {q}",
                self.quarter_shift
            )));
        }
        if self.window_samples()? == 0 {
            return Err(Error::config("integration window must hold at least one sample"));
        }
        Ok(())
    }

    pub fn window_samples(&self) -> Result<usize> {
        sample_count(self.window, self.sample_rate)
    }

    pub fn with_delay(self, delay_compensation: usize) -> Self {
        Self { delay_compensation, ..self }
    }
}

/// Whole-sample lag in `[0, max_delay]` maximizing the cross-correlation
/// `sum_k signal[k + lag] * reference[k]`; ties go to the smallest lag.
pub fn calibrate_delay<T: Real>(pair: &BranchPair<T>, max_delay: usize) -> Result<usize> {
    let signal = pair.signal.samples();
    let reference = pair.reference.samples();
    if max_delay >= signal.len() {
        return Err(Error::Calibration(format!(
            "max delay {max_delay} must be shorter than the signal ({} samples)",
            signal.len()
        )));
    }
    let silent = |s: &[T]| s.iter().all(|x| *x == T::zero());
    if silent(signal) || silent(reference) {
        return Err(Error::Calibration("signal or reference is all zero".into()));
    }
    let mut best = (0usize, T::neg_infinity());
    for lag in 0..=max_delay {
        let c: T = signal[lag..].iter().zip(reference).map(|(&s, &r)| s * r).sum();
        if c > best.1 {
            best = (lag, c);
        }
    }
    Ok(best.0)
}

/// Incremental I/Q accumulator. Feeding samples in ascending order gives
/// bit-identical results to [`demodulate`].
#[derive(Debug, Clone, Copy, Default)]
pub struct DemodAccumulator<T = f64> {
    i: T,
    q: T,
    count: usize,
}

impl<T: Real> DemodAccumulator<T> {
    pub fn new() -> Self {
        Self { i: T::zero(), q: T::zero(), count: 0 }
    }

    /// One aligned sample: the signal, the reference, and the reference one
    /// quarter period later.
    #[inline]
    pub fn push(&mut self, signal: T, reference: T, reference_shifted: T) {
        self.i = self.i + signal * reference;
        self.q = self.q + signal * reference_shifted;
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn value(&self) -> IqPoint<T> {
        IqPoint::new(self.i, self.q)
    }
}

/// Integrates one IQ point from a signal/reference pair.
///
/// The signal is read from `delay_compensation` onwards; the reference from
/// zero, with its quarter-shifted copy reading `quarter_shift` samples ahead.
pub fn demodulate<T: Real>(pair: &BranchPair<T>, cfg: &DemodConfig) -> Result<IqPoint<T>> {
    let rate = pair.signal.sample_rate();
    if !same_rate(rate, cfg.sample_rate) || !same_rate(pair.reference.sample_rate(), cfg.sample_rate) {
        return Err(Error::RateMismatch { expected: cfg.sample_rate, actual: rate });
    }
    let n = cfg.window_samples()?;
    let d = cfg.delay_compensation;
    let q = cfg.quarter_shift;
    let signal = pair.signal.samples();
    let reference = pair.reference.samples();
    if signal.len() < d + n {
        return Err(Error::TooShort { needed: d + n, available: signal.len() });
    }
    if reference.len() < n + q {
        return Err(Error::TooShort { needed: n + q, available: reference.len() });
    }
    let mut acc = DemodAccumulator::new();
    for k in 0..n {
        acc.push(signal[d + k], reference[k], reference[k + q]);
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{synth_pulse, PulseShape, SampleStream};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn tone(phase: f64, duration: f64) -> SampleStream<f64> {
        synth_pulse(&PulseShape::rectangular(62.5e6, phase, 1.0, duration), PROCESSING_RATE).unwrap()
    }

    fn pair(signal: SampleStream<f64>, reference: SampleStream<f64>) -> BranchPair<f64> {
        BranchPair::new(signal, reference).unwrap()
    }

    #[test]
    fn quarter_period_examples() {
        assert_eq!(quarter_period_samples(62.5e6, 500e6).unwrap(), 2);
        assert_eq!(quarter_period_samples(125e6, 500e6).unwrap(), 1);
        assert!(matches!(quarter_period_samples(80e6, 500e6), Err(Error::Config(_))));
        assert!(quarter_period_samples(0.0, 500e6).is_err());
        // above fs/4 the quarter period rounds to zero samples
        assert!(quarter_period_samples(200e6, 500e6).is_err());
    }

    #[test]
    fn self_demodulation_is_half_the_window() {
        let cfg = DemodConfig::baseline();
        let r = tone(0.0, 816e-9);
        let p = demodulate(&pair(r.clone(), r), &cfg).unwrap();
        assert!((p.i - 200.0).abs() < 1e-9, "{p:?}");
        assert!(p.q.abs() < 1e-9, "{p:?}");
    }

    #[test]
    fn quarter_shifted_signal_lands_on_q() {
        let cfg = DemodConfig::baseline();
        let r = tone(0.0, 816e-9);
        let s = tone(FRAC_PI_2, 816e-9);
        let p = demodulate(&pair(s, r), &cfg).unwrap();
        assert!(p.i.abs() < 1e-9, "{p:?}");
        assert!((p.q - 200.0).abs() < 1e-9, "{p:?}");
    }

    #[test]
    fn silent_signal_gives_origin() {
        let cfg = DemodConfig::baseline();
        let r = tone(0.0, 816e-9);
        let s = SampleStream::zeros(408, PROCESSING_RATE).unwrap();
        assert_eq!(demodulate(&pair(s, r), &cfg).unwrap(), IqPoint::new(0.0, 0.0));
    }

    #[test]
    fn short_streams_rejected() {
        let cfg = DemodConfig::baseline();
        let r = tone(0.0, 800e-9);
        // 400 reference samples cannot cover the quarter-shifted window
        assert!(matches!(demodulate(&pair(r.clone(), r.clone()), &cfg), Err(Error::TooShort { .. })));
        let long = tone(0.0, 816e-9);
        let cfg = cfg.with_delay(20);
        assert!(matches!(demodulate(&pair(r, long), &cfg), Err(Error::TooShort { .. })));
    }

    #[test]
    fn phase_amplitude_examples() {
        let (a, ph) = phase_amplitude(IqPoint::new(3.0, 4.0));
        assert_eq!(a, 5.0);
        assert_eq!(ph, 4f64.atan2(3.0));
        let (a, ph) = phase_amplitude(IqPoint::new(0.0, 2.5));
        assert_eq!((a, ph), (2.5, FRAC_PI_2));
        assert_eq!(phase_amplitude(IqPoint::new(0.0f32, 0.0)), (0.0, 0.0));
    }

    #[test]
    fn delay_calibration_examples() {
        let r = tone(0.0, 816e-9);
        for d in [0usize, 17] {
            let p = pair(r.delayed(d), r.clone());
            assert_eq!(calibrate_delay(&p, 64).unwrap(), d);
        }
        let z = SampleStream::zeros(408, PROCESSING_RATE).unwrap();
        assert!(matches!(calibrate_delay(&pair(z, r.clone()), 64), Err(Error::Calibration(_))));
        assert!(calibrate_delay(&pair(r.clone(), r), 408).is_err());
    }

    #[test]
    fn compensated_delay_matches_undelayed() {
        let r = tone(0.0, 816e-9);
        // a pure tone only fixes its delay modulo the carrier phase, so the
        // probe must be an in-phase copy of the reference
        let s = tone(0.0, 816e-9).scaled(0.4);
        let base = demodulate(&pair(s.clone(), r.clone()), &DemodConfig::baseline()).unwrap();
        for d in [1usize, 5, 17, 64] {
            let p = pair(s.delayed(d), r.clone());
            let cal = calibrate_delay(&p, 64).unwrap();
            assert_eq!(cal, d);
            let got = demodulate(&p, &DemodConfig::baseline().with_delay(cal)).unwrap();
            assert_eq!(got, base);
        }
    }

    #[test]
    fn streaming_matches_batch_bitwise() {
        let cfg = DemodConfig::baseline().with_delay(3);
        let r = tone(0.0, 816e-9);
        let s = tone(1.1, 816e-9).delayed(3);
        let batch = demodulate(&pair(s.clone(), r.clone()), &cfg).unwrap();
        let mut acc = DemodAccumulator::new();
        for k in 0..400 {
            acc.push(s.samples()[k + 3], r.samples()[k], r.samples()[k + 2]);
        }
        assert_eq!(acc.count(), 400);
        assert_eq!(acc.value(), batch);
    }

    #[test]
    fn iq_point_rotation() {
        let p = IqPoint::new(1.0, 0.0).rotated(PI / 2.0);
        assert!(p.i.abs() < 1e-15 && (p.q - 1.0).abs() < 1e-15);
    }
}
