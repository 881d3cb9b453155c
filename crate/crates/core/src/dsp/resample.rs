use std::f64::consts::PI;

use crate::dsp::{same_rate, SampleStream, CONVERTER_RATE, PROCESSING_RATE};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Zeroth-order modified Bessel function of the first kind, power series.
pub fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Integer-factor decimator / interpolator built around one symmetric
/// (linear-phase) low-pass FIR running at the high rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateConverter<T = f64> {
    factor: usize,
    taps: Vec<T>,
    high_rate: f64,
}

impl<T: Real> RateConverter<T> {
    /// Wraps an existing tap set. Taps must be exactly symmetric.
    pub fn from_taps(factor: usize, taps: Vec<T>, high_rate: f64) -> Result<Self> {
        if factor == 0 {
            return Err(Error::config("rate conversion factor must be >= 1"));
        }
        if taps.is_empty() {
            return Err(Error::config("filter needs at least one tap"));
        }
        if !(high_rate > 0.0) {
            return Err(Error::config(format!("high rate must be > 0, got {high_rate}")));
        }
        let n = taps.len();
        if (0..n / 2).any(|j| taps[j] != taps[n - 1 - j]) {
            return Err(Error::config("filter taps are not symmetric"));
        }
        Ok(Self { factor, taps, high_rate })
    }

    /// Kaiser-windowed sinc low-pass with cutoff midway between the band
    /// edges. The tap count is the Kaiser estimate rounded up so that the
    /// group delay is a whole number of low-rate samples.
    pub fn design(
        factor: usize,
        high_rate: f64,
        passband_edge: f64,
        stopband_edge: f64,
        attenuation_db: f64,
    ) -> Result<Self> {
        if factor == 0 || !(0.0 < passband_edge && passband_edge < stopband_edge) {
            return Err(Error::config("need factor >= 1 and 0 < passband edge < stopband edge"));
        }
        if stopband_edge >= high_rate / 2.0 {
            return Err(Error::config("stopband edge must lie below the high-rate Nyquist frequency"));
        }
        let transition = (stopband_edge - passband_edge) / high_rate;
        let estimate = (attenuation_db - 7.95) / (2.285 * 2.0 * PI * transition);
        let half = (estimate / 2.0).ceil().max(1.0) as usize;
        let half = half.div_ceil(factor) * factor;
        let n = 2 * half + 1;

        let beta = if attenuation_db > 50.0 {
            0.1102 * (attenuation_db - 8.7)
        } else if attenuation_db >= 21.0 {
            0.5842 * (attenuation_db - 21.0).powf(0.4) + 0.07886 * (attenuation_db - 21.0)
        } else {
            0.0
        };
        let cutoff = (passband_edge + stopband_edge) / 2.0 / high_rate;
        let i0_beta = bessel_i0(beta);
        let raw: Vec<f64> = (0..n)
            .map(|j| {
                let x = j as f64 - half as f64;
                let ideal = if x == 0.0 {
                    2.0 * cutoff
                } else {
                    (2.0 * PI * cutoff * x).sin() / (PI * x)
                };
                let r = x / half as f64;
                ideal * bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0_beta
            })
            .collect();
        // symmetric pair sums keep the DC normalization symmetric too
        let dc: f64 = raw.iter().sum();
        let mut taps = vec![T::zero(); n];
        for j in 0..=half {
            let v = T::lit(raw[j] / dc);
            taps[j] = v;
            taps[n - 1 - j] = v;
        }
        Self::from_taps(factor, taps, high_rate)
    }

    /// The platform converter: 4 GSa/s to 500 MSa/s, flat to 100 MHz,
    /// at least 60 dB down from 250 MHz.
    pub fn platform() -> Self {
        let factor = (CONVERTER_RATE / PROCESSING_RATE).round() as usize;
        Self::design(factor, CONVERTER_RATE, 100e6, 250e6, 66.0)
            .expect("platform filter parameters are valid")
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn taps(&self) -> &[T] {
        &self.taps
    }

    pub fn high_rate(&self) -> f64 {
        self.high_rate
    }

    pub fn low_rate(&self) -> f64 {
        self.high_rate / self.factor as f64
    }

    /// `(n_taps - 1) / (2 * high_rate)`, in seconds.
    pub fn group_delay(&self) -> f64 {
        (self.taps.len() - 1) as f64 / (2.0 * self.high_rate)
    }

    /// Group delay in high-rate samples.
    pub fn group_delay_samples(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Magnitude response at `frequency` Hz (DTFT of the taps).
    pub fn magnitude_response(&self, frequency: f64) -> f64 {
        let w = 2.0 * PI * frequency / self.high_rate;
        let (re, im) = self.taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (j, h)| {
            let h = h.as_f64();
            (re + h * (w * j as f64).cos(), im - h * (w * j as f64).sin())
        });
        re.hypot(im)
    }

    fn check_rate(expected: f64, actual: f64) -> Result<()> {
        if same_rate(expected, actual) {
            Ok(())
        } else {
            Err(Error::RateMismatch { expected, actual })
        }
    }

    /// Causal FIR at the high rate, same length as the input.
    pub fn filter(&self, s: &SampleStream<T>) -> Result<SampleStream<T>> {
        Self::check_rate(self.high_rate, s.sample_rate())?;
        let x = s.samples();
        let out = (0..x.len()).map(|n| self.convolve_at(x, n)).collect();
        SampleStream::new(out, self.high_rate)
    }

    #[inline]
    fn convolve_at(&self, x: &[T], n: usize) -> T {
        let lo = n.saturating_sub(self.taps.len() - 1);
        let mut acc = T::zero();
        for (i, &xi) in x.iter().enumerate().take(n + 1).skip(lo) {
            acc = acc + self.taps[n - i] * xi;
        }
        acc
    }

    /// Anti-alias filter, then keep every `factor`-th sample.
    pub fn decimate(&self, s: &SampleStream<T>) -> Result<SampleStream<T>> {
        Self::check_rate(self.high_rate, s.sample_rate())?;
        let x = s.samples();
        let out = (0..x.len() / self.factor).map(|m| self.convolve_at(x, m * self.factor)).collect();
        SampleStream::new(out, self.low_rate())
    }

    /// Zero-stuff by `factor`, then image-reject filter with gain `factor`.
    pub fn interpolate(&self, s: &SampleStream<T>) -> Result<SampleStream<T>> {
        Self::check_rate(self.low_rate(), s.sample_rate())?;
        let x = s.samples();
        let l = self.factor;
        let gain = T::lit(l as f64);
        let n_taps = self.taps.len();
        let out = (0..x.len() * l)
            .map(|n| {
                // inputs m with 0 <= n - m*l < n_taps
                let m_hi = n / l;
                let m_lo = (n + 1).saturating_sub(n_taps).div_ceil(l);
                let mut acc = T::zero();
                for (m, &xm) in x.iter().enumerate().take(m_hi + 1).skip(m_lo) {
                    acc = acc + self.taps[n - m * l] * xm;
                }
                acc * gain
            })
            .collect();
        SampleStream::new(out, self.high_rate)
    }
}
