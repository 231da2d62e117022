mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::data::SyntheticArgs;
use commands::predict::PredictArgs;
use config::{Precision, RunConfig};
use mindcast_core::model::ModelError;
use mindcast_core::numerics::NumericsError;

/// Train, evaluate, and analyze models that describe the intents and
/// emotional reactions behind short event phrases.
#[derive(Parser)]
#[command(name = "mindcast", version, about)]
struct Cli {
    /// Config file (TOML). `mindcast.toml` is picked up when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Overrides {
    /// Corpus file (canonical TSV or released CSV)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// canonical-tsv | released-csv
    #[arg(long)]
    corpus_format: Option<String>,
    /// Pretrained word-embedding text file
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Expected embedding dimension (default 300)
    #[arg(long)]
    embedding_dim: Option<usize>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    characters: Option<PathBuf>,
    /// Output directory (default mindcast-out)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// max-pool | mean-pool | convnet | birnn
    #[arg(long)]
    encoder: Option<String>,
    /// Event-encoding size H
    #[arg(long)]
    h: Option<usize>,
    /// ngram | sequence
    #[arg(long)]
    decoder: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// f32 | f64 (default f64)
    #[arg(long)]
    precision: Option<String>,
    #[arg(long)]
    beam_width: Option<usize>,
    /// Candidates per task (recall@k)
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train encoder and task decoders on a corpus
    Train {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Evaluate a checkpoint: cross-entropy and recall@k
    Eval {
        /// train | dev | test | all
        #[arg(long, default_value = "test")]
        split: String,
        /// Add Blank / 2+People / Idiom subset rows
        #[arg(long)]
        subsets: bool,
        /// Sample N events and write a blank human-rating template
        #[arg(long, value_name = "N")]
        export_human_eval: Option<usize>,
        /// Score a filled-in human-rating file (precision@10)
        #[arg(long)]
        ratings: Option<PathBuf>,
        /// Raters required to count a candidate as sensible
        #[arg(long, default_value_t = 1)]
        rater_threshold: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Generate ranked intent/reaction descriptions for events
    Predict {
        /// Event text ("PersonX drinks a cup of coffee")
        event: Option<String>,
        /// File with one event per line
        #[arg(long)]
        batch: Option<PathBuf>,
        /// Read events from stdin, one per line
        #[arg(long)]
        interactive: bool,
        /// Write results here instead of stdout
        #[arg(long)]
        out_file: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Decode from points on the line between two event encodings
    Interpolate {
        #[arg(long)]
        event1: String,
        #[arg(long)]
        event2: String,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Lexicon-category gender analysis over character events
    Bias {
        /// Family-wise significance level
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Build and save the vocabulary for a corpus
    BuildVocab {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Generate seeded toy corpus, embeddings, cast, and lexicon
    MakeSynthetic {
        #[arg(long, default_value_t = 50)]
        events: usize,
        /// Characters in the synthetic cast
        #[arg(long, default_value_t = 100)]
        cast: usize,
        /// Synthetic embedding dimension
        #[arg(long, default_value_t = 16)]
        dim: usize,
        /// Give some annotations multiple responses per task
        #[arg(long)]
        multi_response: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
}

impl Command {
    fn overrides(&self) -> &Overrides {
        match self {
            Command::Train { overrides }
            | Command::Eval { overrides, .. }
            | Command::Predict { overrides, .. }
            | Command::Interpolate { overrides, .. }
            | Command::Bias { overrides, .. }
            | Command::BuildVocab { overrides }
            | Command::MakeSynthetic { overrides, .. } => overrides,
        }
    }
}

fn merge_overrides(config: &mut RunConfig, o: &Overrides) {
    macro_rules! set_path {
        ($target:expr, $value:expr) => {
            if let Some(v) = &$value {
                $target = Some(v.clone());
            }
        };
    }
    set_path!(config.paths.corpus, o.corpus);
    set_path!(config.paths.corpus_format, o.corpus_format);
    set_path!(config.paths.embeddings, o.embeddings);
    set_path!(config.paths.checkpoint, o.checkpoint);
    set_path!(config.paths.vocab, o.vocab);
    set_path!(config.paths.lexicon, o.lexicon);
    set_path!(config.paths.characters, o.characters);
    set_path!(config.paths.out_dir, o.out);
    if let Some(v) = o.embedding_dim {
        config.paths.embedding_dim = Some(v);
    }
    if let Some(v) = o.seed {
        config.run.seed = v;
    }
    if let Some(v) = &o.encoder {
        config.model.encoder = v.clone();
    }
    if let Some(v) = o.h {
        config.model.h = v;
    }
    if let Some(v) = &o.decoder {
        config.model.decoder = v.clone();
    }
    if let Some(v) = o.epochs {
        config.train.epochs = v;
    }
    if let Some(v) = o.batch_size {
        config.train.batch_size = v;
    }
    if let Some(v) = o.lr {
        config.train.lr = v;
    }
    if let Some(v) = &o.precision {
        config.run.precision = v.clone();
    }
    if let Some(v) = o.beam_width {
        config.infer.beam_width = v;
    }
    if let Some(v) = o.k {
        config.infer.k = v;
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => {
            let default = PathBuf::from("mindcast.toml");
            if default.exists() {
                RunConfig::load(&default)?
            } else {
                RunConfig::default()
            }
        }
    };
    config.apply_env();
    merge_overrides(&mut config, cli.command.overrides());
    let precision = config.precision()?;

    macro_rules! with_precision {
        ($($f:ident)::+ $(, $arg:expr)*) => {
            match precision {
                Precision::F64 => $($f)::+::<f64>(&config $(, $arg)*),
                Precision::F32 => $($f)::+::<f32>(&config $(, $arg)*),
            }
        };
    }

    match &cli.command {
        Command::Train { .. } => with_precision!(commands::train::run),
        Command::Eval {
            split,
            subsets,
            export_human_eval,
            ratings,
            rater_threshold,
            ..
        } => {
            let args = commands::eval::EvalArgs {
                split: split.clone(),
                subsets: *subsets,
                export_human_eval: *export_human_eval,
                ratings: ratings.clone(),
                rater_threshold: *rater_threshold,
            };
            with_precision!(commands::eval::run, &args)
        }
        Command::Predict {
            event,
            batch,
            interactive,
            out_file,
            ..
        } => {
            let args = PredictArgs {
                event: event.clone(),
                batch: batch.clone(),
                interactive: *interactive,
                out: out_file.clone(),
            };
            with_precision!(commands::predict::run, &args)
        }
        Command::Interpolate {
            event1,
            event2,
            steps,
            ..
        } => {
            with_precision!(commands::predict::run_interpolate, event1, event2, *steps)
        }
        Command::Bias { alpha, .. } => with_precision!(commands::bias::run, *alpha),
        Command::BuildVocab { .. } => commands::data::run_build_vocab(&config),
        Command::MakeSynthetic {
            events,
            cast,
            dim,
            multi_response,
            ..
        } => commands::data::run_make_synthetic(
            &config,
            &SyntheticArgs {
                events: *events,
                cast: *cast,
                dim: *dim,
                multi_response: *multi_response,
            },
        ),
    }
}

/// 0 success, 1 internal error, 2 bad input or paths.
fn classify_exit(error: &anyhow::Error) -> u8 {
    for cause in error.chain() {
        if let Some(model_err) = cause.downcast_ref::<ModelError>() {
            return match model_err {
                ModelError::NanLoss { .. } | ModelError::Numerics(_) => 1,
                _ => 2,
            };
        }
        if cause.downcast_ref::<NumericsError>().is_some() {
            return 1;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify_exit(&e))
        }
    }
}
