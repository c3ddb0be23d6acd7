use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nntts::pipeline::{
    cmd_analyze, cmd_gen_corpus, cmd_quantize, cmd_spectrogram, cmd_synth, cmd_train, PipelineError, ProjectConfig,
    TrainTarget,
};

#[derive(Parser)]
#[command(name = "nntts", version, about = "Neural parametric speech synthesis back-end")]
struct Cli {
    /// Project configuration (TOML); built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse a WAV file into an AFRM parameter file.
    Analyze { audio: PathBuf, out: PathBuf },
    /// Train the duration or the acoustic network on a corpus directory.
    Train {
        /// Directory of NAME.wav, NAME.phn and NAME.syn files.
        corpus: Option<PathBuf>,
        #[arg(long, value_parser = ["duration", "acoustic"])]
        target: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesize a WAV file from NAME.phn (and NAME.syn if present).
    Synth {
        labels: PathBuf,
        out: PathBuf,
        #[arg(long)]
        duration_model: Option<PathBuf>,
        #[arg(long)]
        acoustic_model: Option<PathBuf>,
        /// Keep the label timing instead of predicting durations.
        #[arg(long)]
        natural_durations: bool,
    },
    /// Render a WAV file as a PGM spectrogram.
    Spectrogram { audio: PathBuf, out: PathBuf },
    /// Quantize float models to 8 bits: IN OUT [IN OUT ...].
    Quantize {
        #[arg(num_args = 2.., required = true)]
        models: Vec<PathBuf>,
    },
    /// Write a seeded synthetic corpus.
    GenCorpus {
        out: PathBuf,
        #[arg(long)]
        count: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => ProjectConfig::load(p)?,
        None => ProjectConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.apply_seed(seed);
    }
    let missing = |what: &str| PipelineError::Config(format!("no {what} given on the command line or in [paths]"));
    match cli.command {
        Command::Analyze { audio, out } => {
            let r = cmd_analyze(&cfg, &audio, &out)?;
            println!("{} frames", r.frames);
        }
        Command::Train { corpus, target, out } => {
            let corpus = corpus.or(cfg.paths.corpus.clone()).ok_or_else(|| missing("corpus"))?;
            let r = cmd_train(&cfg, &corpus, target.parse::<TrainTarget>()?, &out)?;
            println!(
                "final loss {:.6e}, mean predictor {:.6e}, history in {}",
                r.report.losses.last().copied().unwrap_or(f64::NAN),
                r.report.baseline,
                r.loss_csv.display()
            );
        }
        Command::Synth {
            labels,
            out,
            duration_model,
            acoustic_model,
            natural_durations,
        } => {
            let acoustic = acoustic_model
                .or(cfg.paths.acoustic_model.clone())
                .ok_or_else(|| missing("acoustic model"))?;
            let duration = duration_model.or(cfg.paths.duration_model.clone());
            let r = cmd_synth(&cfg, &labels, duration.as_deref(), &acoustic, &out, natural_durations)?;
            println!("{} frames, {} samples", r.frames, r.samples);
        }
        Command::Spectrogram { audio, out } => {
            let img = cmd_spectrogram(&cfg, &audio, &out)?;
            println!("{}x{} image", img.width, img.height);
        }
        Command::Quantize { models } => {
            if models.len() % 2 != 0 {
                return Err(PipelineError::Config("quantize takes IN OUT pairs".into()));
            }
            let pairs: Vec<(PathBuf, PathBuf)> = models.chunks(2).map(|p| (p[0].clone(), p[1].clone())).collect();
            let r = cmd_quantize(&cfg, &pairs)?;
            print!("{}", r.render());
            if !r.within_budget() {
                eprintln!(
                    "warning: joint quantized size {} bytes is not below the budget of {} bytes",
                    r.joint_weight_bytes, r.budget_bytes
                );
            }
        }
        Command::GenCorpus { out, count } => {
            let n = cmd_gen_corpus(&cfg, &out, count.unwrap_or(cfg.synthetic.utterances), cfg.synthetic.seed)?;
            println!("{n} utterances");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // help and version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error[E_ARGS]: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.to_string().replace('\n', "; ");
            eprintln!("error[{}]: {line}", e.code());
            ExitCode::FAILURE
        }
    }
}
