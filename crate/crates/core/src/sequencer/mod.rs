//! Conditional pulse programs: validation into a timed schedule with the
//! platform latency inserted before every branch, and shot execution
//! against the qubit, channel, demodulation and discriminant models.

mod execute;
mod latency;
mod program;

pub use execute::{execute_shot, pi_pulse, readout_pulse, Readout, ShotEngine, ShotRecord, TimelineEvent, DRIVE_IF};
pub use latency::{platform_latency, LatencyModel};
pub use program::{
    active_reset_program, validate, Channel, Instruction, OpKind, PulseSpec, Schedule, ScheduleEntry, Timed,
};
