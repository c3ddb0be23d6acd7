//! Files, configuration and the commands behind the command-line tool.

mod commands;
mod config;
mod corpus_io;
mod spectrogram;
mod wav;

pub use commands::{
    cmd_analyze, cmd_gen_corpus, cmd_quantize, cmd_spectrogram, cmd_synth, cmd_train, duration_spec,
    load_acoustic_model, load_duration_model, loss_csv_path, phonetic_spec, AnalyzeReport, QuantizeReport,
    QuantizedEntry, SynthReport, TrainOutcome, TrainTarget,
};
pub use config::{AudioSection, LossWeights, Paths, ProjectConfig, QuantizeSection, SyntheticSection, VocoderSection};
pub use corpus_io::{analyze_corpus, load_corpus, load_labels, write_utterance};
pub use spectrogram::{spectrogram, GrayImage, SpectrogramConfig};
pub use wav::{read_wav, wav_bytes, write_wav};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::duration::ModelError;
use crate::netgraph::GraphError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Format(String),
    #[error("labels: {0}")]
    Labels(String),
    #[error("corpus: {}", .0.join("; "))]
    Corpus(Vec<String>),
    #[error("{0}")]
    Digest(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Load failure of a model file, naming the file.
    pub fn model_file(path: &Path, e: GraphError) -> Self {
        match e {
            GraphError::Digest => PipelineError::Digest(format!("{}: {e}", path.display())),
            GraphError::Format(_) => PipelineError::Format(format!("{}: {e}", path.display())),
            other => PipelineError::Model(ModelError::Graph(other)),
        }
    }

    /// Stable machine-readable code printed by the command-line tool.
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "E_CONFIG",
            PipelineError::Io { .. } => "E_IO",
            PipelineError::Format(_) => "E_FORMAT",
            PipelineError::Labels(_) => "E_LABELS",
            PipelineError::Corpus(_) => "E_CORPUS",
            PipelineError::Digest(_) => "E_DIGEST",
            PipelineError::Model(_) => "E_MODEL",
        }
    }
}
