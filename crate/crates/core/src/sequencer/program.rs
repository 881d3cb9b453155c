use serde::{Deserialize, Serialize};

use crate::dsp::{Envelope, PulseShape, TICK_NS};
use crate::error::{Error, Result};
use crate::physics::QubitState;
use crate::sequencer::LatencyModel;

/// Output channel of a `Play`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Readout,
    Drive,
}

/// Pulse description in program files: frequency in Hz, times in ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub frequency_hz: f64,
    #[serde(default)]
    pub phase_rad: f64,
    #[serde(default = "unit")]
    pub amplitude: f64,
    pub duration_ns: u64,
    /// Gaussian ramp length; absent means a rectangular envelope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rise_ns: Option<u64>,
}

fn unit() -> f64 {
    1.0
}

impl PulseSpec {
    pub fn to_shape(&self) -> PulseShape {
        PulseShape {
            frequency: self.frequency_hz,
            phase: self.phase_rad,
            amplitude: self.amplitude,
            duration: self.duration_ns as f64 * 1e-9,
            envelope: match self.rise_ns {
                None => Envelope::Rectangular,
                Some(r) => Envelope::GaussianFlattop { rise: r as f64 * 1e-9 },
            },
        }
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Instruction {
    /// A pulse on `channel`. `pi: true` plays the calibrated pi pulse and
    /// needs no explicit shape.
    Play {
        channel: Channel,
        #[serde(default, skip_serializing_if = "is_false")]
        pi: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shape: Option<PulseSpec>,
    },
    /// Readout pulse and synchronous acquisition of equal length.
    Acquire { window_ns: u64 },
    Wait { duration_ns: u64 },
    /// Continue with `if_e` or `if_g` depending on the most recent Acquire.
    Branch { if_e: Vec<Instruction>, if_g: Vec<Instruction> },
}

impl Instruction {
    pub fn pi() -> Self {
        Instruction::Play { channel: Channel::Drive, pi: true, shape: None }
    }
}

/// Measure, then flip the qubit only if it was found excited.
pub fn active_reset_program(window_ns: u64) -> Vec<Instruction> {
    vec![
        Instruction::Acquire { window_ns },
        Instruction::Branch { if_e: vec![Instruction::pi()], if_g: vec![] },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Play { channel: Channel, pi: bool },
    Acquire,
    Wait,
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::Play { pi: true, .. } => "pi",
            OpKind::Play { channel: Channel::Drive, .. } => "play_drive",
            OpKind::Play { channel: Channel::Readout, .. } => "play_readout",
            OpKind::Acquire => "readout",
            OpKind::Wait => "wait",
        }
    }

    pub fn channel(&self) -> Option<Channel> {
        match self {
            OpKind::Play { channel, .. } => Some(*channel),
            OpKind::Acquire => Some(Channel::Readout),
            OpKind::Wait => None,
        }
    }
}

/// One instruction with absolute times in ns from the program start.
#[derive(Debug, Clone, PartialEq)]
pub enum Timed {
    Op { kind: OpKind, start_ns: u64, end_ns: u64 },
    Branch {
        /// End of the acquisition the branch depends on.
        decided_ns: u64,
        start_ns: u64,
        end_ns: u64,
        if_e: Vec<Timed>,
        if_g: Vec<Timed>,
    },
}

impl Timed {
    pub fn end_ns(&self) -> u64 {
        match self {
            Timed::Op { end_ns, .. } | Timed::Branch { end_ns, .. } => *end_ns,
        }
    }
}

/// Flat view of one schedule entry; `arm` is set inside a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScheduleEntry {
    pub name: &'static str,
    pub start_ns: u64,
    pub end_ns: u64,
    pub arm: Option<QubitState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub ops: Vec<Timed>,
    pub latency_ns: u64,
}

impl Schedule {
    /// End of the longest path, in ns.
    pub fn duration_ns(&self) -> u64 {
        self.ops.last().map_or(0, Timed::end_ns)
    }

    pub fn entries(&self) -> Vec<ScheduleEntry> {
        fn walk(ops: &[Timed], arm: Option<QubitState>, out: &mut Vec<ScheduleEntry>) {
            for op in ops {
                match op {
                    Timed::Op { kind, start_ns, end_ns } => {
                        out.push(ScheduleEntry { name: kind.name(), start_ns: *start_ns, end_ns: *end_ns, arm })
                    }
                    Timed::Branch { decided_ns, start_ns, if_e, if_g, .. } => {
                        out.push(ScheduleEntry { name: "latency", start_ns: *decided_ns, end_ns: *start_ns, arm });
                        walk(if_e, Some(QubitState::Excited), out);
                        walk(if_g, Some(QubitState::Ground), out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.ops, None, &mut out);
        out
    }

    /// Every realizable path must keep same-channel operations disjoint.
    pub fn check_overlaps(&self) -> Result<()> {
        for arm in [QubitState::Excited, QubitState::Ground] {
            let mut by_channel: Vec<(Channel, u64, u64)> = Vec::new();
            collect_path(&self.ops, arm, &mut by_channel);
            by_channel.sort_by_key(|&(c, s, _)| (c as u8, s));
            for pair in by_channel.windows(2) {
                let (c0, _, e0) = pair[0];
                let (c1, s1, _) = pair[1];
                if c0 == c1 && s1 < e0 {
                    return Err(Error::Program(format!(
                        "{c0:?} channel pulses overlap: one ends at {e0} ns, the next starts at {s1} ns"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn collect_path(ops: &[Timed], arm: QubitState, out: &mut Vec<(Channel, u64, u64)>) {
    for op in ops {
        match op {
            Timed::Op { kind, start_ns, end_ns } => {
                if let Some(c) = kind.channel() {
                    out.push((c, *start_ns, *end_ns));
                }
            }
            Timed::Branch { if_e, if_g, .. } => {
                collect_path(if arm.is_excited() { if_e } else { if_g }, arm, out)
            }
        }
    }
}

fn tick_aligned(what: &str, ns: u64) -> Result<u64> {
    if !ns.is_multiple_of(TICK_NS) {
        return Err(Error::Program(format!("{what} of {ns} ns is not a multiple of the {TICK_NS} ns tick")));
    }
    Ok(ns)
}

struct Scheduler {
    latency_ns: u64,
    pi_duration_ns: u64,
}

impl Scheduler {
    fn block(
        &self,
        program: &[Instruction],
        mut cursor: u64,
        mut last_acquire: Option<u64>,
        nested: bool,
    ) -> Result<(Vec<Timed>, u64)> {
        let mut out = Vec::with_capacity(program.len());
        for ins in program {
            let (kind, duration) = match ins {
                Instruction::Play { channel, pi, shape } => {
                    let duration = match (pi, shape) {
                        (true, None) => self.pi_duration_ns,
                        (_, Some(s)) => {
                            s.to_shape().validate()?;
                            s.duration_ns
                        }
                        (false, None) => {
                            return Err(Error::Program("play needs a shape or pi: true".into()))
                        }
                    };
                    if *pi && *channel != Channel::Drive {
                        return Err(Error::Program("pi pulses are played on the drive channel".into()));
                    }
                    (OpKind::Play { channel: *channel, pi: *pi }, tick_aligned("pulse", duration)?)
                }
                Instruction::Acquire { window_ns } => {
                    if *window_ns == 0 {
                        return Err(Error::Program("acquire window must be > 0".into()));
                    }
                    (OpKind::Acquire, tick_aligned("acquire window", *window_ns)?)
                }
                Instruction::Wait { duration_ns } => (OpKind::Wait, tick_aligned("wait", *duration_ns)?),
                Instruction::Branch { if_e, if_g } => {
                    if nested {
                        return Err(Error::Program("nested branches are not supported".into()));
                    }
                    let decided = last_acquire
                        .ok_or_else(|| Error::Program("branch without a preceding acquire".into()))?;
                    let start = cursor.max(decided + self.latency_ns);
                    let (e_ops, e_end) = self.block(if_e, start, last_acquire, true)?;
                    let (g_ops, g_end) = self.block(if_g, start, last_acquire, true)?;
                    cursor = e_end.max(g_end);
                    out.push(Timed::Branch {
                        decided_ns: decided,
                        start_ns: start,
                        end_ns: cursor,
                        if_e: e_ops,
                        if_g: g_ops,
                    });
                    continue;
                }
            };
            let start = cursor;
            cursor += duration;
            if kind == OpKind::Acquire {
                last_acquire = Some(cursor);
            }
            out.push(Timed::Op { kind, start_ns: start, end_ns: cursor });
        }
        Ok((out, cursor))
    }
}

/// Assigns absolute start and end times to every instruction.
///
/// Instructions run back to back. A branch starts once the platform latency
/// has elapsed after the end of the acquisition it depends on; what follows
/// a branch starts after its longer arm.
pub fn validate(program: &[Instruction], latency: &LatencyModel, pi_duration_ns: u64) -> Result<Schedule> {
    let scheduler = Scheduler { latency_ns: latency.total_ns(), pi_duration_ns };
    let (ops, _) = scheduler.block(program, 0, None, false)?;
    let schedule = Schedule { ops, latency_ns: latency.total_ns() };
    schedule.check_overlaps()?;
    Ok(schedule)
}
