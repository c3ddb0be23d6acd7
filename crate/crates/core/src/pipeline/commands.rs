use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{
    analyze_corpus, load_corpus, load_labels, read_wav, spectrogram, wav_bytes, write_utterance, GrayImage,
    PipelineError, ProjectConfig, SpectrogramConfig,
};
use crate::acoustic::{
    phonetic_topology, predict_frames, retime, train_acoustic_model, AcousticExample, AcousticModel,
};
use crate::corpus::{generate_synthetic_corpus, PhoneSet, Rulebook};
use crate::duration::{
    duration_frames, duration_topology, predict_durations, train_duration_model, write_durations, DurationModel,
    LabelledSegments,
};
use crate::netgraph::{
    quantize, read_model, write_model, BlockGraph, EpochMode, Normalizer, PayloadFormat, TopologySpec, TrainReport,
};
use crate::vocoder::{analyze_i16, synthesize_i16, write_afrm};

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    std::fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>, PipelineError> {
    std::fs::read(path).map_err(|e| PipelineError::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeReport {
    pub frames: usize,
}

/// WAV to AFRM parameter file.
pub fn cmd_analyze(cfg: &ProjectConfig, audio: &Path, out: &Path) -> Result<AnalyzeReport, PipelineError> {
    let vcfg = cfg.vocoder_config();
    let samples = read_wav(audio, vcfg.sample_rate)?;
    let frames = analyze_i16(&samples, &vcfg).map_err(|e| PipelineError::Format(e.to_string()))?;
    write_file(out, write_afrm(&frames, vcfg.sample_rate, vcfg.order))?;
    log::info!("{}: {} frames", audio.display(), frames.len());
    Ok(AnalyzeReport { frames: frames.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainTarget {
    Duration,
    Acoustic,
}

impl FromStr for TrainTarget {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "duration" => Ok(TrainTarget::Duration),
            "acoustic" => Ok(TrainTarget::Acoustic),
            _ => Err(PipelineError::Config(format!("unknown target `{s}`, expected duration or acoustic"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub report: TrainReport,
    pub loss_csv: PathBuf,
}

/// `model.nnbg` keeps its loss history in `model.loss.csv`.
pub fn loss_csv_path(model: &Path) -> PathBuf {
    model.with_extension("loss.csv")
}

fn loss_csv(report: &TrainReport) -> String {
    let mut out = String::from("epoch,mode,loss,baseline\n");
    for (e, (loss, mode)) in report.losses.iter().zip(&report.modes).enumerate() {
        let mode = match mode {
            EpochMode::Sequential => "sequential",
            EpochMode::Random => "random",
        };
        out.push_str(&format!("{e},{mode},{loss:.9e},{:.9e}\n", report.baseline));
    }
    out
}

/// Trains one network on a corpus directory and writes a float model plus
/// its loss history.
pub fn cmd_train(
    cfg: &ProjectConfig,
    corpus_dir: &Path,
    target: TrainTarget,
    out: &Path,
) -> Result<TrainOutcome, PipelineError> {
    let phones = PhoneSet::timit();
    let enc = cfg.encoder()?;
    let vcfg = cfg.vocoder_config();
    let utts = load_corpus(corpus_dir, vcfg.sample_rate, phones)?;
    let (graph, normalizer, report) = match target {
        TrainTarget::Duration => {
            let data: Vec<LabelledSegments> = utts
                .iter()
                .map(|u| LabelledSegments {
                    segments: &u.segments,
                    syntax: &u.syntax,
                    sample_rate: u.sample_rate,
                })
                .collect();
            let (m, r) = train_duration_model(
                &data,
                &enc,
                &cfg.duration_net,
                &cfg.duration_training,
                cfg.loss_weights.duration.as_deref(),
            )?;
            (m.graph, m.normalizer, r)
        }
        TrainTarget::Acoustic => {
            let frames = analyze_corpus(&utts, &vcfg)?;
            let data: Vec<AcousticExample> = utts
                .iter()
                .zip(&frames)
                .map(|(u, f)| AcousticExample {
                    segments: &u.segments,
                    syntax: &u.syntax,
                    frames: f,
                })
                .collect();
            let (m, r) = train_acoustic_model(
                &data,
                &enc,
                &cfg.phonetic_net,
                &vcfg,
                &cfg.acoustic_training,
                cfg.loss_weights.acoustic.as_deref(),
            )?;
            (m.graph, m.normalizer, r)
        }
    };
    write_file(out, write_model(&graph, &normalizer, PayloadFormat::Float32))?;
    let csv = loss_csv_path(out);
    write_file(&csv, loss_csv(&report))?;
    log::info!(
        "final loss {:.6} (mean predictor {:.6})",
        report.losses.last().copied().unwrap_or(f64::NAN),
        report.baseline
    );
    Ok(TrainOutcome { report, loss_csv: csv })
}

pub fn duration_spec(cfg: &ProjectConfig) -> Result<TopologySpec, PipelineError> {
    Ok(duration_topology(&cfg.duration_net, &cfg.encoder()?)?)
}

pub fn phonetic_spec(cfg: &ProjectConfig) -> Result<TopologySpec, PipelineError> {
    Ok(phonetic_topology(&cfg.phonetic_net, &cfg.encoder()?, cfg.vocoder.lpc_order)?)
}

fn load(path: &Path, spec: &TopologySpec) -> Result<(BlockGraph, Normalizer, PayloadFormat), PipelineError> {
    read_model(&read_file(path)?, spec).map_err(|e| PipelineError::model_file(path, e))
}

pub fn load_duration_model(cfg: &ProjectConfig, path: &Path) -> Result<DurationModel, PipelineError> {
    let (graph, normalizer, _) = load(path, &duration_spec(cfg)?)?;
    Ok(DurationModel { graph, normalizer })
}

pub fn load_acoustic_model(cfg: &ProjectConfig, path: &Path) -> Result<AcousticModel, PipelineError> {
    let (graph, normalizer, _) = load(path, &phonetic_spec(cfg)?)?;
    Ok(AcousticModel { graph, normalizer })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthReport {
    pub frames: usize,
    pub samples: usize,
    /// Per-segment durations file written in network-duration mode.
    pub durations: Option<PathBuf>,
}

/// Labels to waveform. With `natural_durations` the label timing is used as
/// is; otherwise the duration model retimes the labels first and the
/// predicted durations are written beside the output as `OUT.dur`.
pub fn cmd_synth(
    cfg: &ProjectConfig,
    labels: &Path,
    duration_model: Option<&Path>,
    acoustic_model: &Path,
    out: &Path,
    natural_durations: bool,
) -> Result<SynthReport, PipelineError> {
    let phones = PhoneSet::timit();
    let enc = cfg.encoder()?;
    let vcfg = cfg.vocoder_config();
    let (mut segments, mut syntax) = load_labels(labels, phones, None)?;
    let acoustic = load_acoustic_model(cfg, acoustic_model)?;
    let mut durations = None;
    if !natural_durations {
        let path = duration_model
            .ok_or_else(|| PipelineError::Config("network durations need a duration model".into()))?;
        let model = load_duration_model(cfg, path)?;
        let secs = predict_durations(&segments, &syntax, &model, &enc, cfg.frame_seconds())?;
        let frames: Vec<usize> = secs.iter().map(|&s| duration_frames(s, cfg.frame_seconds())).collect();
        let dur_path = out.with_extension("dur");
        write_file(&dur_path, write_durations(&segments, &secs, phones))?;
        durations = Some(dur_path);
        (segments, syntax) = retime(&segments, &syntax, &frames, cfg.hop())?;
    }
    let frames = predict_frames(&segments, &syntax, &acoustic, &enc, &cfg.phonetic_net, &vcfg)?;
    let samples = synthesize_i16(&frames, &vcfg).map_err(|e| PipelineError::Model(e.into()))?;
    write_file(out, wav_bytes(&samples, vcfg.sample_rate))?;
    log::info!("{}: {} frames", out.display(), frames.len());
    Ok(SynthReport {
        frames: frames.len(),
        samples: samples.len(),
        durations,
    })
}

pub fn cmd_spectrogram(cfg: &ProjectConfig, audio: &Path, out: &Path) -> Result<GrayImage, PipelineError> {
    let sr = cfg.audio.sample_rate;
    let samples: Vec<f64> = read_wav(audio, sr)?.iter().map(|&s| s as f64 / 32768.0).collect();
    let img = spectrogram(&samples, sr, &SpectrogramConfig::default());
    write_file(out, img.to_pgm())?;
    Ok(img)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedEntry {
    pub input: PathBuf,
    pub output: PathBuf,
    /// `duration` or `phonetic`.
    pub kind: &'static str,
    /// Bytes of 8-bit weights, scales and offsets.
    pub weight_bytes: usize,
    pub file_bytes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizeReport {
    pub entries: Vec<QuantizedEntry>,
    pub joint_weight_bytes: usize,
    pub budget_bytes: usize,
}

impl QuantizeReport {
    pub fn within_budget(&self) -> bool {
        self.joint_weight_bytes < self.budget_bytes
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{} ({}): {} weight bytes, {} file bytes -> {}\n",
                e.input.display(),
                e.kind,
                e.weight_bytes,
                e.file_bytes,
                e.output.display()
            ));
        }
        out.push_str(&format!(
            "joint: {} weight bytes (budget {})\n",
            self.joint_weight_bytes, self.budget_bytes
        ));
        out
    }
}

/// Quantizes each `(input, output)` model to 8 bits. The network kind is
/// recognised by its topology digest. Exceeding the byte budget only warns.
pub fn cmd_quantize(cfg: &ProjectConfig, pairs: &[(PathBuf, PathBuf)]) -> Result<QuantizeReport, PipelineError> {
    if pairs.is_empty() {
        return Err(PipelineError::Config("nothing to quantize".into()));
    }
    let specs = [("duration", duration_spec(cfg)?), ("phonetic", phonetic_spec(cfg)?)];
    let mut entries = Vec::new();
    for (input, output) in pairs {
        let bytes = read_file(input)?;
        let mut last = None;
        let mut found = None;
        for (kind, spec) in &specs {
            match read_model(&bytes, spec) {
                Ok((g, n, _)) => {
                    found = Some((*kind, g, n));
                    break;
                }
                Err(e) => last = Some(e),
            }
        }
        let Some((kind, graph, normalizer)) = found else {
            return Err(PipelineError::model_file(input, last.expect("two specs tried")));
        };
        let q = write_model(&graph, &normalizer, PayloadFormat::Int8);
        write_file(output, &q)?;
        entries.push(QuantizedEntry {
            input: input.clone(),
            output: output.clone(),
            kind,
            weight_bytes: quantize(&graph).byte_size(),
            file_bytes: q.len(),
        });
    }
    let report = QuantizeReport {
        joint_weight_bytes: entries.iter().map(|e| e.weight_bytes).sum(),
        entries,
        budget_bytes: cfg.quantize.budget_bytes,
    };
    if !report.within_budget() {
        log::warn!(
            "joint quantized size {} bytes is not below the budget of {} bytes",
            report.joint_weight_bytes,
            report.budget_bytes
        );
    }
    Ok(report)
}

/// Writes a seeded rulebook corpus as WAV, `.phn` and `.syn` files.
pub fn cmd_gen_corpus(cfg: &ProjectConfig, out_dir: &Path, count: usize, seed: u64) -> Result<usize, PipelineError> {
    if cfg.audio.sample_rate != crate::DEFAULT_SAMPLE_RATE || cfg.hop() != crate::DEFAULT_FRAME_LEN {
        return Err(PipelineError::Config(
            "the synthetic corpus is generated at 16 kHz with 10 ms frames".into(),
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
    let utts = generate_synthetic_corpus(seed, count, &Rulebook::default());
    for u in &utts {
        write_utterance(out_dir, u, PhoneSet::timit())?;
    }
    Ok(utts.len())
}
