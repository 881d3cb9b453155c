//! Stochastic two-level qubit: thermal occupation, single-jump relaxation
//! over an interval, imperfect pi pulses, and the population/temperature
//! relation of a two-level Boltzmann distribution.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Planck constant, J s (exact SI value).
pub const PLANCK: f64 = 6.62607015e-34;
/// Boltzmann constant, J/K (exact SI value).
pub const BOLTZMANN: f64 = 1.380649e-23;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitState {
    #[serde(rename = "g")]
    Ground,
    #[serde(rename = "e")]
    Excited,
}

impl QubitState {
    pub fn flipped(self) -> Self {
        match self {
            QubitState::Ground => QubitState::Excited,
            QubitState::Excited => QubitState::Ground,
        }
    }

    pub fn is_excited(self) -> bool {
        self == QubitState::Excited
    }

    /// Row/column index in a transition matrix: g = 0, e = 1.
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Physical constants of the two-level system. Frequencies in Hz, times in s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    pub f01: f64,
    pub t1: f64,
    pub p1_eq: f64,
    pub pi_error: f64,
    pub pi_duration: f64,
}

impl QubitParams {
    /// Fluxonium operating point with the calibrated pi-pulse defaults.
    pub fn baseline() -> Self {
        Self { f01: 1.26e9, t1: 80e-6, p1_eq: 0.117, pi_error: 0.001, pi_duration: 250e-9 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f01 > 0.0 && self.f01.is_finite()) {
            return Err(Error::config(format!("f01 must be > 0, got {}", self.f01)));
        }
        if !(self.t1 > 0.0) {
            return Err(Error::config(format!("T1 must be > 0, got {}", self.t1)));
        }
        // 0.5 is the infinite-temperature limit and 1.0 a pulse that never flips;
        // both are accepted as degenerate operating points.
        if !(0.0..=0.5).contains(&self.p1_eq) {
            return Err(Error::config(format!("p1_eq must be in [0, 0.5], got {}", self.p1_eq)));
        }
        if !(0.0..=1.0).contains(&self.pi_error) {
            return Err(Error::config(format!("pi_error must be in [0, 1], got {}", self.pi_error)));
        }
        if !(self.pi_duration >= 0.0) {
            return Err(Error::config("pi_duration must be >= 0"));
        }
        Ok(())
    }
}

impl Default for QubitParams {
    fn default() -> Self {
        Self::baseline()
    }
}

/// Per-shot random stream. Identical `(seed, stream_id)` pairs yield
/// identical draws no matter which thread or in which order shots run.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { seed, stream_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn h_over_kb<T: Real>() -> T {
    T::lit(PLANCK / BOLTZMANN)
}

/// Excited-state occupation `1 / (1 + exp(h f01 / (kB T)))`.
pub fn thermal_population<T: Real>(f01: T, temperature: T) -> Result<T> {
    if !(temperature > T::zero()) {
        return Err(Error::domain(format!("temperature must be > 0 K, got {temperature:?}")));
    }
    let x = h_over_kb::<T>() * f01 / temperature;
    Ok(T::one() / (T::one() + x.exp()))
}

/// Inverse of [`thermal_population`]: `(h f01 / kB) / ln((1 - p1) / p1)`.
pub fn effective_temperature<T: Real>(p1: T, f01: T) -> Result<T> {
    let half = T::lit(0.5);
    if !(p1 > T::zero() && p1 < half) {
        return Err(Error::domain(format!(
            "population {p1:?} has no positive-temperature solution (need 0 < p1 < 0.5)"
        )));
    }
    Ok(h_over_kb::<T>() * f01 / ((T::one() - p1) / p1).ln())
}

/// Row-stochastic single-jump transition matrix over `dt` seconds,
/// indexed `[from][to]` with g = 0, e = 1.
pub fn transition_matrix(dt: f64, params: &QubitParams) -> Result<[[f64; 2]; 2]> {
    if !(dt >= 0.0) {
        return Err(Error::domain(format!("time step must be >= 0, got {dt}")));
    }
    let relaxed = -(-dt / params.t1).exp_m1();
    let up = params.p1_eq * relaxed;
    let down = (1.0 - params.p1_eq) * relaxed;
    Ok([[1.0 - up, up], [down, 1.0 - down]])
}

pub fn sample_thermal(params: &QubitParams, rng: &mut RngStream) -> QubitState {
    if rng.uniform() < params.p1_eq {
        QubitState::Excited
    } else {
        QubitState::Ground
    }
}

/// Advances `state` by `dt` seconds with at most one jump.
pub fn evolve(
    state: QubitState,
    dt: f64,
    params: &QubitParams,
    rng: &mut RngStream,
) -> Result<QubitState> {
    let m = transition_matrix(dt, params)?;
    let jump = m[state.index()][state.flipped().index()];
    if jump > 0.0 && rng.uniform() < jump {
        Ok(state.flipped())
    } else {
        Ok(state)
    }
}

/// Flips the state except with probability `pi_error`.
pub fn apply_pi_pulse(state: QubitState, params: &QubitParams, rng: &mut RngStream) -> QubitState {
    if rng.uniform() < 1.0 - params.pi_error {
        state.flipped()
    } else {
        state
    }
}
