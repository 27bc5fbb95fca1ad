//! Link-level simulation and analysis of bistatic broadband backscatter
//! links: a multi-antenna backscatter device applies cyclic delay diversity
//! to zero-padded single-carrier blocks, and the reader removes the direct
//! carrier, estimates the channel from anti-symmetric pilots and equalizes
//! in the frequency domain.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`, see
//! [`Real`]); the aliases below fix it to `f64`, which is what the
//! experiment harness uses.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod benchmarks;
pub mod channel;
pub mod harness;
pub mod numerics;
pub mod receiver;
pub mod waveform;

mod error;
mod scalar;

pub use error::{Error, Result};
pub use scalar::{norm_sqr, Cx, Real};

pub type C64 = Cx<f64>;
pub type ChannelRealization64 = channel::ChannelRealization<f64>;
pub type ChannelModel64 = channel::ChannelModel<f64>;
pub type GkParams64 = analysis::GkParams<f64>;
pub type OlaBlock64 = receiver::OlaBlock<f64>;
pub type ChannelEstimate64 = receiver::ChannelEstimate<f64>;
pub type EqualizerOutput64 = receiver::EqualizerOutput<f64>;
pub type FrameReceiver64 = receiver::FrameReceiver<f64>;
pub type ModulationAlphabet64 = waveform::ModulationAlphabet<f64>;
pub type BenchmarkScheme64 = benchmarks::BenchmarkScheme<f64>;
