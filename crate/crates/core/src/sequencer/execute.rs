use serde::Serialize;

use crate::channel::{ChannelConfig, Jump, ReadoutChannel};
use crate::demod::{demodulate, DemodConfig, IqPoint};
use crate::discriminate::{classify, Discriminant};
use crate::dsp::{Envelope, PulseShape};
use crate::error::{Error, Result};
use crate::physics::{apply_pi_pulse, evolve, sample_thermal, transition_matrix, QubitParams, QubitState, RngStream};
use crate::scalar::Real;
use crate::sequencer::{validate, Channel, Instruction, LatencyModel, OpKind, Schedule, Timed};

/// IF of the qubit drive pulses.
pub const DRIVE_IF: f64 = 80e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimelineEvent {
    pub name: &'static str,
    /// Seconds from the start of the shot.
    pub start: f64,
    pub end: f64,
}

/// Outcome trace of one shot. `iq` and `decision` belong to the most
/// recent acquisition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotRecord<T = f64> {
    pub initial_state: QubitState,
    pub iq: Option<IqPoint<T>>,
    pub decision: Option<QubitState>,
    pub pi_applied: bool,
    pub final_state: QubitState,
    pub timeline: Vec<TimelineEvent>,
}

/// Result of one readout: the integrated point, its classification and the
/// qubit state once the window has elapsed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Readout<T = f64> {
    pub iq: IqPoint<T>,
    pub decision: QubitState,
    pub state_after: QubitState,
}

/// Everything needed to run shots of one program, precomputed once and
/// shared read-only between worker threads.
#[derive(Debug, Clone)]
pub struct ShotEngine<T = f64> {
    qubit: QubitParams,
    demod: DemodConfig,
    disc: Discriminant<T>,
    channel: ReadoutChannel<T>,
    schedule: Schedule,
    window_ns: u64,
}

/// The readout tone: the acquisition window plus one quarter carrier period,
/// so that the quarter-shifted reference covers the whole window.
pub fn readout_pulse(demod: &DemodConfig, amplitude: f64) -> PulseShape {
    let tail = demod.quarter_shift as f64 / demod.sample_rate;
    PulseShape::rectangular(demod.f_if, 0.0, amplitude, demod.window + tail)
}

/// The calibrated pi pulse on the drive channel.
pub fn pi_pulse(qubit: &QubitParams) -> PulseShape {
    let rise = (qubit.pi_duration / 4.0).min(20e-9);
    let envelope = if rise > 0.0 { Envelope::GaussianFlattop { rise } } else { Envelope::Rectangular };
    PulseShape { frequency: DRIVE_IF, phase: 0.0, amplitude: 1.0, duration: qubit.pi_duration, envelope }
}

fn ns(seconds: f64) -> Result<u64> {
    let v = seconds * 1e9;
    if !(v >= 0.0) || (v - v.round()).abs() > 1e-6 * v.max(1.0) {
        return Err(Error::config(format!("{seconds} s is not a whole number of ns")));
    }
    Ok(v.round() as u64)
}

struct Walk<'a> {
    state: QubitState,
    t_ns: u64,
    decision: Option<QubitState>,
    pi_applied: bool,
    timeline: Vec<TimelineEvent>,
    rng: &'a mut RngStream,
}

impl<T: Real> ShotEngine<T> {
    pub fn new(
        program: &[Instruction],
        qubit: &QubitParams,
        channel: &ChannelConfig,
        demod: &DemodConfig,
        disc: &Discriminant<T>,
        latency: &LatencyModel,
    ) -> Result<Self> {
        qubit.validate()?;
        demod.validate()?;
        let schedule = validate(program, latency, ns(qubit.pi_duration)?)?;
        let window_ns = ns(demod.window)?;
        check_windows(&schedule.ops, window_ns)?;
        let channel = ReadoutChannel::new(channel, &readout_pulse(demod, channel.readout_amplitude))?;
        Ok(Self { qubit: *qubit, demod: *demod, disc: *disc, channel, schedule, window_ns })
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn readout_channel(&self) -> &ReadoutChannel<T> {
        &self.channel
    }

    /// Transmit, demodulate and classify one readout of a qubit in `state`.
    ///
    /// By default the readout is QND: the signal reflects `state` and the
    /// window's relaxation is applied afterwards. With mid-readout jumps
    /// enabled a transition inside the window switches the response at the
    /// jump sample.
    pub fn readout(&self, state: QubitState, rng: &mut RngStream) -> Result<Readout<T>> {
        let window = self.demod.window;
        let (pair, state_after) = if self.channel.config().mid_readout_jumps {
            let m = transition_matrix(window, &self.qubit)?;
            let p_jump = m[state.index()][state.flipped().index()];
            if p_jump > 0.0 && rng.uniform() < p_jump {
                // jump time from the exponential law truncated to the window
                let t1 = self.qubit.t1;
                let u = rng.uniform();
                let t = -t1 * (-u * (-(-window / t1).exp_m1())).ln_1p();
                let n = self.demod.window_samples()?;
                let at_sample = ((t * self.demod.sample_rate) as usize).min(n - 1);
                let to = state.flipped();
                (self.channel.shot_with_jump(state, Some(Jump { at_sample, to }), rng), to)
            } else {
                (self.channel.shot(state, rng), state)
            }
        } else {
            let pair = self.channel.shot(state, rng);
            (pair, evolve(state, window, &self.qubit, rng)?)
        };
        let iq = demodulate(&pair, &self.demod)?;
        Ok(Readout { iq, decision: classify(&self.disc, &iq), state_after })
    }

    /// One shot from a thermally sampled initial state.
    pub fn run(&self, rng: &mut RngStream) -> Result<ShotRecord<T>> {
        let initial = sample_thermal(&self.qubit, rng);
        self.run_from(initial, rng)
    }

    pub fn run_from(&self, initial: QubitState, rng: &mut RngStream) -> Result<ShotRecord<T>> {
        let mut walk = Walk {
            state: initial,
            t_ns: 0,
            decision: None,
            pi_applied: false,
            timeline: Vec::with_capacity(4),
            rng,
        };
        let mut last_iq: Option<IqPoint<T>> = None;
        self.run_block(&self.schedule.ops, &mut walk, &mut last_iq)?;
        Ok(ShotRecord {
            initial_state: initial,
            iq: last_iq,
            decision: walk.decision,
            pi_applied: walk.pi_applied,
            final_state: walk.state,
            timeline: walk.timeline,
        })
    }

    fn evolve_to(&self, walk: &mut Walk<'_>, t_ns: u64) -> Result<()> {
        if t_ns > walk.t_ns {
            walk.state = evolve(walk.state, (t_ns - walk.t_ns) as f64 * 1e-9, &self.qubit, walk.rng)?;
            walk.t_ns = t_ns;
        }
        Ok(())
    }

    fn run_block(&self, ops: &[Timed], walk: &mut Walk<'_>, last_iq: &mut Option<IqPoint<T>>) -> Result<()> {
        for op in ops {
            match op {
                Timed::Op { kind, start_ns, end_ns } => {
                    self.evolve_to(walk, *start_ns)?;
                    match kind {
                        OpKind::Acquire => {
                            let r = self.readout(walk.state, walk.rng)?;
                            walk.state = r.state_after;
                            walk.t_ns = *end_ns;
                            *last_iq = Some(r.iq);
                            walk.decision = Some(r.decision);
                        }
                        OpKind::Play { channel: Channel::Drive, pi: true } => {
                            walk.state = apply_pi_pulse(walk.state, &self.qubit, walk.rng);
                            walk.pi_applied = true;
                        }
                        OpKind::Play { .. } | OpKind::Wait => {}
                    }
                    self.evolve_to(walk, *end_ns)?;
                    walk.timeline.push(TimelineEvent {
                        name: kind.name(),
                        start: *start_ns as f64 * 1e-9,
                        end: *end_ns as f64 * 1e-9,
                    });
                }
                Timed::Branch { decided_ns, start_ns, if_e, if_g, .. } => {
                    if start_ns > decided_ns {
                        walk.timeline.push(TimelineEvent {
                            name: "latency",
                            start: *decided_ns as f64 * 1e-9,
                            end: *start_ns as f64 * 1e-9,
                        });
                    }
                    self.evolve_to(walk, *start_ns)?;
                    let decision = walk.decision.unwrap_or(QubitState::Ground);
                    let arm = if decision.is_excited() { if_e } else { if_g };
                    self.run_block(arm, walk, last_iq)?;
                }
            }
        }
        Ok(())
    }

    pub fn window_ns(&self) -> u64 {
        self.window_ns
    }
}

fn check_windows(ops: &[Timed], window_ns: u64) -> Result<()> {
    for op in ops {
        match op {
            Timed::Op { kind: OpKind::Acquire, start_ns, end_ns } if end_ns - start_ns != window_ns => {
                return Err(Error::Program(format!(
                    "acquire of {} ns does not match the {window_ns} ns demodulation window",
                    end_ns - start_ns
                )));
            }
            Timed::Branch { if_e, if_g, .. } => {
                check_windows(if_e, window_ns)?;
                check_windows(if_g, window_ns)?;
            }
            _ => {}
        }
    }
    Ok(())
}

/// Runs `program` once for a thermally initialized qubit.
#[allow(clippy::too_many_arguments)]
pub fn execute_shot<T: Real>(
    program: &[Instruction],
    qubit: &QubitParams,
    channel: &ChannelConfig,
    demod: &DemodConfig,
    disc: &Discriminant<T>,
    latency: &LatencyModel,
    rng: &mut RngStream,
) -> Result<ShotRecord<T>> {
    ShotEngine::new(program, qubit, channel, demod, disc, latency)?.run(rng)
}
