//! LPC vocoder with line-spectral-frequency filters and two-band excitation.
//!
//! Every 10 ms frame is described by `P` line spectral frequencies, the
//! fundamental frequency, the frame power and the boundary between a
//! low-frequency voiced band and a high-frequency noise band. Unvoiced frames
//! carry a fixed, high F0 so that the parameter track stays continuous.

mod afrm;
mod analysis;
mod lpc;
mod lsf;
mod noise;
mod pitch;
mod synthesis;
mod voicing;

pub use afrm::{read_afrm, write_afrm, AfrmHeader, AFRM_MAGIC, AFRM_VERSION};
pub use analysis::{analyze, analyze_i16};
pub use lpc::{autocorrelate, hamming, levinson_durbin, reflection_to_lpc, LpcModel};
pub use lsf::{is_valid_lsf, lpc_to_lsf, lsf_to_lpc};
pub use noise::Lcg;
pub use pitch::{estimate_f0, F0Estimate};
pub use synthesis::{synthesize, synthesize_i16};
pub use voicing::estimate_voicing_boundary;

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VocoderError {
    #[error("block of {got} samples is too short, need at least {needed}")]
    BlockTooShort { needed: usize, got: usize },
    #[error("zero-lag autocorrelation {0} is not positive")]
    NonPositiveEnergy(f64),
    #[error("reflection coefficient {reflection} at stage {stage} is not inside the unit interval")]
    Degenerate { stage: usize, reflection: f64 },
    #[error("filter is not minimum phase: {0}")]
    Unstable(String),
    #[error("line spectral frequencies must be strictly increasing inside (0, pi)")]
    InvalidLsf,
    #[error("frame {index}: {message}")]
    Frame { index: usize, message: String },
    #[error("parameter file: {0}")]
    Format(String),
}

/// Coder parameters for one 10 ms frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticFrame {
    /// Line spectral frequencies, radians, strictly increasing in `(0, pi)`.
    pub lsf: Vec<f64>,
    /// Hz. Equal to the clamp value when unvoiced.
    pub f0: f64,
    /// Mean-square power of the frame in dB relative to full scale.
    pub power_db: f64,
    /// Hz. Zero when unvoiced.
    pub voicing_boundary: f64,
    pub voiced: bool,
}

impl AcousticFrame {
    /// A silent unvoiced frame with a flat spectrum.
    pub fn silent(cfg: &VocoderConfig) -> Self {
        AcousticFrame {
            lsf: flat_lsf(cfg.order),
            f0: cfg.clamp_f0,
            power_db: cfg.power_floor_db,
            voicing_boundary: 0.0,
            voiced: false,
        }
    }

    /// Checks the frame invariants, naming the first one violated.
    pub fn check(&self, cfg: &VocoderConfig) -> Result<(), String> {
        if self.lsf.len() != cfg.order {
            return Err(format!("expected {} LSFs, got {}", cfg.order, self.lsf.len()));
        }
        if !is_valid_lsf(&self.lsf) {
            return Err("LSFs are not strictly increasing inside (0, pi)".into());
        }
        if !(self.f0 > 0.0) {
            return Err(format!("f0 {} is not positive", self.f0));
        }
        if !self.voiced && self.f0 != cfg.clamp_f0 {
            return Err(format!("unvoiced frame has f0 {} instead of the clamp {}", self.f0, cfg.clamp_f0));
        }
        if !(0.0..=cfg.nyquist()).contains(&self.voicing_boundary) {
            return Err(format!("voicing boundary {} outside [0, {}]", self.voicing_boundary, cfg.nyquist()));
        }
        if !self.voiced && self.voicing_boundary != 0.0 {
            return Err("unvoiced frame has a non-zero voicing boundary".into());
        }
        if !self.power_db.is_finite() {
            return Err("power is not finite".into());
        }
        Ok(())
    }
}

/// `k pi / (P + 1)`: the LSFs of a flat spectrum.
pub fn flat_lsf(order: usize) -> Vec<f64> {
    (1..=order).map(|k| k as f64 * PI / (order + 1) as f64).collect()
}

/// Analysis and synthesis settings.
#[derive(Debug, Clone, PartialEq)]
pub struct VocoderConfig {
    pub sample_rate: u32,
    /// LPC order `P`.
    pub order: usize,
    /// Frame hop in samples (10 ms).
    pub hop: usize,
    /// Hamming analysis window length in samples (25 ms).
    pub window: usize,
    /// Block length used for F0 and voicing estimation.
    pub pitch_window: usize,
    pub f0_min: f64,
    pub f0_max: f64,
    /// F0 carried by unvoiced frames.
    pub clamp_f0: f64,
    /// Normalized autocorrelation needed to call a frame voiced.
    pub voicing_threshold: f64,
    /// Equal-width bands used for the voicing boundary.
    pub n_bands: usize,
    pub harmonicity_threshold: f64,
    /// Frames below this power are unvoiced regardless of periodicity.
    pub voicing_gate_db: f64,
    /// Lowest representable frame power.
    pub power_floor_db: f64,
    /// Filter interpolation steps per frame.
    pub subframes: usize,
    pub noise_seed: u64,
}

impl Default for VocoderConfig {
    fn default() -> Self {
        VocoderConfig {
            sample_rate: crate::DEFAULT_SAMPLE_RATE,
            order: 10,
            hop: 160,
            window: 400,
            pitch_window: 640,
            f0_min: 60.0,
            f0_max: 350.0,
            clamp_f0: 400.0,
            voicing_threshold: 0.5,
            n_bands: 8,
            harmonicity_threshold: 0.5,
            voicing_gate_db: -60.0,
            power_floor_db: -120.0,
            subframes: 4,
            noise_seed: 0x5eed_1234,
        }
    }
}

impl VocoderConfig {
    pub fn nyquist(&self) -> f64 {
        self.sample_rate as f64 / 2.0
    }

    /// Parameters per frame: LSFs, F0, power, voicing boundary.
    pub fn frame_width(&self) -> usize {
        self.order + 3
    }
}
