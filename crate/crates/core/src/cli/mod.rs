//! `riskseq` subcommands: generate, train, evaluate, compare, attention.
//!
//! Exit codes: 0 success, 1 configuration or validation, 2 I/O, 3 numerical abort.

mod commands;
mod config;

pub use commands::{
    cmd_attention, cmd_compare, cmd_evaluate, cmd_generate, cmd_train, corpus_summary, write_atomic, CompareOutcome,
    CorpusSummary, TrainOutcome,
};
pub use config::{
    read_corpus, DatasetSection, EncoderMode, EncoderSection, Encoders, EngineConfig, EvaluationSection, ModelSection,
    Requirement, MIN_COMPARE_SEEDS,
};

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::dataset::DatasetError;
use crate::encoders::EncoderError;
use crate::evaluation::{EvaluationError, RunError};
use crate::model::{Architecture, ModelError};
use crate::pipeline::PipelineError;
use crate::training::TrainError;

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// An engine error; `code` is fixed when it is converted.
    #[error("{source}")]
    Engine {
        code: u8,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Engine { code, .. } => *code,
        }
    }
}

fn dataset_code(e: &DatasetError) -> u8 {
    match e {
        DatasetError::Io(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn encoder_code(e: &EncoderError) -> u8 {
    match e {
        EncoderError::Io(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn model_code(e: &ModelError) -> u8 {
    match e {
        ModelError::Io(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn train_code(e: &TrainError) -> u8 {
    match e {
        TrainError::NumericalAbort { .. } => EXIT_NUMERICAL,
        TrainError::Model(m) => model_code(m),
        TrainError::Dataset(d) => dataset_code(d),
        TrainError::Config(_) | TrainError::EmptySet(_) => EXIT_CONFIG,
    }
}

fn pipeline_code(e: &PipelineError) -> u8 {
    match e {
        PipelineError::Encoder { source, .. } => encoder_code(source),
        PipelineError::Dataset(d) => dataset_code(d),
    }
}

fn run_code(e: &RunError) -> u8 {
    match e {
        RunError::Pipeline(p) => pipeline_code(p),
        RunError::Dataset(d) => dataset_code(d),
        RunError::Train(t) => train_code(t),
        RunError::Metrics(m) => evaluation_code(m),
    }
}

fn evaluation_code(e: &EvaluationError) -> u8 {
    match e {
        EvaluationError::Run { source, .. } => run_code(source),
        _ => EXIT_CONFIG,
    }
}

macro_rules! engine_error {
    ($($ty:ty => $code:ident),* $(,)?) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Engine { code: $code(&e), source: Box::new(e) }
            }
        }
    )*};
}

engine_error! {
    DatasetError => dataset_code,
    EncoderError => encoder_code,
    ModelError => model_code,
    TrainError => train_code,
    PipelineError => pipeline_code,
    RunError => run_code,
    EvaluationError => evaluation_code,
}

#[derive(Debug, Parser)]
#[command(
    name = "riskseq",
    version,
    about = "Time-decayed, emotion-fused sequence classifiers for user-level risk"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus and print its class and post-count summary.
    Generate(CommonArgs),
    /// Downsample, split, encode and train; writes the best checkpoint and the history.
    Train(CommonArgs),
    /// Score a checkpoint on a corpus; writes metrics as JSON and one CSV row.
    Evaluate(CommonArgs),
    /// Multi-seed runs per architecture and Wilcoxon tests on consecutive pairs.
    Compare(CommonArgs),
    /// Ranked per-post attention weights of an attention model.
    Attention(CommonArgs),
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// generate: generator seed; train: run seed; compare: offset added to every configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Primary output file of the command.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Corpus JSONL, replacing `dataset.path`.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Comma-separated architectures for compare, replacing `evaluation.architectures`.
    #[arg(long, value_delimiter = ',')]
    pub arch: Vec<Architecture>,
}

impl CommonArgs {
    /// Loads the manifest and folds the flags into it.
    pub fn engine_config(&self, command: Requirement) -> Result<EngineConfig, CliError> {
        let mut config = EngineConfig::load(&self.config)?;
        if let Some(p) = &self.corpus {
            config.dataset.path = Some(p.clone());
        }
        if let Some(w) = self.workers {
            config.evaluation.workers = w;
        }
        if self.top_k.is_some() {
            config.evaluation.top_k = self.top_k;
        }
        if !self.arch.is_empty() {
            config.evaluation.architectures = self.arch.clone();
        }
        if let Some(seed) = self.seed {
            match command {
                Requirement::Generate => config.dataset.generator_seed = seed,
                Requirement::Compare => {
                    for s in &mut config.evaluation.seeds {
                        *s = s.wrapping_add(seed);
                    }
                }
                _ => config.training.seed = seed,
            }
        }
        if let Some(p) = &self.checkpoint {
            config.training.checkpoint_path = Some(p.clone());
        }
        Ok(config)
    }
}

/// Runs one parsed command line, printing human-readable results to stdout.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => {
            let config = args.engine_config(Requirement::Generate)?;
            let summary = cmd_generate(&config, args.out.as_deref())?;
            println!("{}", summary.line());
        }
        Command::Train(args) => {
            let config = args.engine_config(Requirement::Train)?;
            let outcome = cmd_train(&config, args.out.as_deref())?;
            for record in &outcome.history.epochs {
                println!("{}", record.progress_line());
            }
            println!(
                "best epoch {}  test f1 {:.4}  checkpoint {}  history {}",
                outcome.history.best_epoch,
                outcome.report.f1,
                outcome.checkpoint.display(),
                outcome.history_path.display()
            );
        }
        Command::Evaluate(args) => {
            let config = args.engine_config(Requirement::Evaluate)?;
            let report = cmd_evaluate(&config, args.out.as_deref())?;
            println!(
                "accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}",
                report.accuracy, report.precision, report.recall, report.f1
            );
        }
        Command::Compare(args) => {
            let config = args.engine_config(Requirement::Compare)?;
            let outcome = cmd_compare(&config, args.out.as_deref())?;
            print!("{}", outcome.table());
        }
        Command::Attention(args) => {
            let config = args.engine_config(Requirement::Attention)?;
            let path = cmd_attention(&config, args.out.as_deref())?;
            println!("attention report {}", path.display());
        }
    }
    Ok(())
}
