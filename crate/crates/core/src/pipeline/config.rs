use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::acoustic::PhoneticNetConfig;
use crate::duration::DurationNetConfig;
use crate::encoding::{Encoder, EncodingConfig};
use crate::netgraph::TrainingSchedule;
use crate::vocoder::VocoderConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioSection {
    pub sample_rate: u32,
    pub frame_ms: f64,
    /// Analysis window length.
    pub window_ms: f64,
}

impl Default for AudioSection {
    fn default() -> Self {
        AudioSection {
            sample_rate: crate::DEFAULT_SAMPLE_RATE,
            frame_ms: 10.0,
            window_ms: 25.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocoderSection {
    pub lpc_order: usize,
    pub clamp_f0: f64,
    pub f0_min: f64,
    pub f0_max: f64,
    pub pitch_window_ms: f64,
    pub voicing_threshold: f64,
    pub n_bands: usize,
    pub harmonicity_threshold: f64,
    pub voicing_gate_db: f64,
    pub power_floor_db: f64,
    pub subframes: usize,
    pub noise_seed: u64,
}

impl Default for VocoderSection {
    fn default() -> Self {
        let v = VocoderConfig::default();
        VocoderSection {
            lpc_order: v.order,
            clamp_f0: v.clamp_f0,
            f0_min: v.f0_min,
            f0_max: v.f0_max,
            pitch_window_ms: 40.0,
            voicing_threshold: v.voicing_threshold,
            n_bands: v.n_bands,
            harmonicity_threshold: v.harmonicity_threshold,
            voicing_gate_db: v.voicing_gate_db,
            power_floor_db: v.power_floor_db,
            subframes: v.subframes,
            noise_seed: v.noise_seed,
        }
    }
}

/// Per-dimension loss weights; inverse target variance when absent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub duration: Option<Vec<f64>>,
    pub acoustic: Option<Vec<f64>>,
}

/// Files the commands fall back on when not given on the command line.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub duration_model: Option<PathBuf>,
    pub acoustic_model: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSection {
    pub utterances: usize,
    pub seed: u64,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        SyntheticSection { utterances: 200, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizeSection {
    /// Joint size of the quantized weights above which a warning is issued.
    pub budget_bytes: usize,
}

impl Default for QuantizeSection {
    fn default() -> Self {
        QuantizeSection { budget_bytes: 102_400 }
    }
}

/// Every setting of a project, read from one TOML file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub audio: AudioSection,
    pub vocoder: VocoderSection,
    pub encoding: EncodingConfig,
    pub duration_net: DurationNetConfig,
    pub phonetic_net: PhoneticNetConfig,
    pub duration_training: TrainingSchedule,
    pub acoustic_training: TrainingSchedule,
    pub loss_weights: LossWeights,
    pub paths: Paths,
    pub synthetic: SyntheticSection,
    pub quantize: QuantizeSection,
}

fn samples_for(ms: f64, rate: u32, what: &str) -> Result<usize, PipelineError> {
    let n = ms * rate as f64 / 1000.0;
    if !(n >= 1.0) || (n - n.round()).abs() > 1e-9 {
        return Err(PipelineError::Config(format!(
            "{what} of {ms} ms is not a whole number of samples at {rate} Hz"
        )));
    }
    Ok(n.round() as usize)
}

impl ProjectConfig {
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let cfg: ProjectConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reseeds weight initialization, training order and corpus generation.
    pub fn apply_seed(&mut self, seed: u64) {
        self.duration_net.seed = seed;
        self.phonetic_net.seed = seed.wrapping_add(1);
        self.duration_training.seed = seed;
        self.acoustic_training.seed = seed;
        self.synthetic.seed = seed;
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        let a = &self.audio;
        if a.sample_rate == 0 {
            return bad("sample_rate must be positive".into());
        }
        samples_for(a.frame_ms, a.sample_rate, "frame")?;
        samples_for(a.window_ms, a.sample_rate, "analysis window")?;
        samples_for(self.vocoder.pitch_window_ms, a.sample_rate, "pitch window")?;
        if self.encoding.frame_ms != a.frame_ms {
            return bad(format!(
                "encoding frame_ms {} differs from audio frame_ms {}",
                self.encoding.frame_ms, a.frame_ms
            ));
        }
        let spans = self.encoding.window_ms / a.frame_ms;
        if (spans - spans.round()).abs() > 1e-9 {
            return bad(format!(
                "frame_ms {} does not divide the tap window of {} ms",
                a.frame_ms, self.encoding.window_ms
            ));
        }
        let v = &self.vocoder;
        if v.lpc_order == 0 {
            return bad("lpc_order must be positive".into());
        }
        if !(0.0 < v.f0_min && v.f0_min < v.f0_max && v.f0_max < v.clamp_f0) {
            return bad("need 0 < f0_min < f0_max < clamp_f0".into());
        }
        if v.clamp_f0 >= a.sample_rate as f64 / 2.0 {
            return bad("clamp_f0 must lie below the Nyquist frequency".into());
        }
        if v.n_bands == 0 || v.subframes == 0 {
            return bad("n_bands and subframes must be positive".into());
        }
        for s in [&self.duration_training, &self.acoustic_training] {
            s.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        if let Some(w) = &self.loss_weights.duration {
            if w.len() != 1 {
                return bad(format!("duration loss weights need 1 entry, got {}", w.len()));
            }
        }
        if let Some(w) = &self.loss_weights.acoustic {
            if w.len() != v.lpc_order + 3 {
                return bad(format!(
                    "acoustic loss weights need {} entries, got {}",
                    v.lpc_order + 3,
                    w.len()
                ));
            }
        }
        let weights = self.loss_weights.duration.iter().chain(&self.loss_weights.acoustic);
        if weights.flatten().any(|&x| !(x >= 0.0)) {
            return bad("loss weights must be non-negative".into());
        }
        let p = &self.paths;
        for path in [&p.corpus, &p.duration_model, &p.acoustic_model].into_iter().flatten() {
            if !path.exists() {
                return bad(format!("{} does not exist", path.display()));
            }
        }
        self.encoder()?;
        Ok(())
    }

    pub fn hop(&self) -> usize {
        (self.audio.frame_ms * self.audio.sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn frame_seconds(&self) -> f64 {
        self.audio.frame_ms / 1000.0
    }

    pub fn vocoder_config(&self) -> VocoderConfig {
        let a = &self.audio;
        let v = &self.vocoder;
        let ms = |x: f64| (x * a.sample_rate as f64 / 1000.0).round() as usize;
        VocoderConfig {
            sample_rate: a.sample_rate,
            order: v.lpc_order,
            hop: self.hop(),
            window: ms(a.window_ms),
            pitch_window: ms(v.pitch_window_ms),
            f0_min: v.f0_min,
            f0_max: v.f0_max,
            clamp_f0: v.clamp_f0,
            voicing_threshold: v.voicing_threshold,
            n_bands: v.n_bands,
            harmonicity_threshold: v.harmonicity_threshold,
            voicing_gate_db: v.voicing_gate_db,
            power_floor_db: v.power_floor_db,
            subframes: v.subframes,
            noise_seed: v.noise_seed,
        }
    }

    pub fn encoder(&self) -> Result<Encoder, PipelineError> {
        Encoder::new(self.encoding.clone(), self.hop()).map_err(|e| PipelineError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_component_defaults() {
        let cfg = ProjectConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.vocoder_config(), VocoderConfig::default());
        assert_eq!(cfg.hop(), 160);
    }

    #[test]
    fn text_round_trip_and_partial_files() {
        let mut cfg = ProjectConfig::default();
        cfg.apply_seed(42);
        assert_eq!(ProjectConfig::parse(&cfg.to_text()).unwrap(), cfg);
        let partial = ProjectConfig::parse("[vocoder]\nclamp_f0 = 380.0\n").unwrap();
        assert_eq!(partial.vocoder_config().clamp_f0, 380.0);
        assert_eq!(partial.audio, AudioSection::default());
    }

    #[test]
    fn invalid_settings_are_rejected() {
        for text in [
            "[audio]\nframe_ms = 7.0\n[encoding]\nframe_ms = 7.0\n",
            "[encoding]\nframe_ms = 5.0\n",
            "[encoding]\nwindow_ms = 305.0\n",
            "[vocoder]\nclamp_f0 = 300.0\n",
            "[loss_weights]\nduration = [1.0, 2.0]\n",
            "[paths]\ncorpus = \"/no/such/dir\"\n",
            "[audio]\nunknown = 1\n",
        ] {
            assert!(matches!(ProjectConfig::parse(text), Err(PipelineError::Config(_))), "{text}");
        }
    }
}
