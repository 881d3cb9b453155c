//! Sample-accurate model of an FPGA qubit readout and feedback platform.
//!
//! The signal path (`dsp`, `channel`, `demod`, `discriminate`) is generic
//! over the sample type through [`Real`]; the aliases below fix it to `f64`
//! or `f32`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod demod;
pub mod discriminate;
pub mod dsp;
mod error;
pub mod physics;
mod scalar;
pub mod sequencer;

pub use error::{Error, Result};
pub use scalar::Real;

pub use channel::{BranchPair, ChannelConfig, Transmission};
pub use demod::{DemodConfig, IqPoint};
pub use discriminate::{BlobModel, Discriminant};
pub use dsp::{PulseShape, RateConverter, SampleStream};
pub use physics::{QubitParams, QubitState, RngStream};
pub use sequencer::{Instruction, LatencyModel, ShotRecord};

pub type SampleStream64 = SampleStream<f64>;
pub type SampleStream32 = SampleStream<f32>;
pub type RateConverter64 = RateConverter<f64>;
pub type RateConverter32 = RateConverter<f32>;
pub type IqPoint64 = IqPoint<f64>;
pub type IqPoint32 = IqPoint<f32>;
pub type BranchPair64 = BranchPair<f64>;
pub type BranchPair32 = BranchPair<f32>;
pub type Discriminant64 = Discriminant<f64>;
pub type Discriminant32 = Discriminant<f32>;
pub type BlobModel64 = BlobModel<f64>;
pub type BlobModel32 = BlobModel<f32>;
pub type ShotRecord64 = ShotRecord<f64>;
pub type ShotRecord32 = ShotRecord<f32>;
