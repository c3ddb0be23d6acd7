//! Neural parametric speech synthesis back-end.
//!
//! The pipeline runs from phonetic and syntactic labels to a waveform:
//!
//! 1. [`duration`] predicts a log-duration for every phonetic segment with a
//!    recurrent network fed through a shift register of neighbouring segments.
//! 2. [`acoustic`] maps each 10 ms frame of phonetic and timing context, sampled
//!    through a non-uniform time-delay window, onto vocoder parameters.
//! 3. [`vocoder`] turns the parameter tracks back into speech with a two-band
//!    excitation driving an all-pole filter described by line spectral
//!    frequencies. Its analysis half produces the training targets.
//!
//! [`netgraph`] is the block-graph network engine both models are built on,
//! [`encoding`] turns labels into network inputs, [`corpus`] reads labelled
//! speech and [`pipeline`] ties everything to files and the command line.

pub mod acoustic;
pub mod corpus;
pub mod duration;
pub mod encoding;
pub mod netgraph;
pub mod pipeline;
pub mod vocoder;

/// Project-wide default sample rate in Hz.
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Samples in one 10 ms frame at the default rate.
pub const DEFAULT_FRAME_LEN: usize = 160;
