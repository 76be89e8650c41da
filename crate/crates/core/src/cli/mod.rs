//! Command-line front end. Exit codes: 0 success, 1 runtime failure,
//! 2 usage or configuration error.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use config::{ExperimentConfig, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

pub(crate) fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Cdsco,
    Bioscope,
    Sfu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subset {
    Punct,
    Nopunct,
}

#[derive(Debug, Parser)]
#[command(name = "negscope", version, about = "Negation cue detection and scope resolution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a corpus to the JSON-lines format.
    Ingest {
        #[arg(long, value_enum)]
        format: Format,
        /// File, or for SFU a directory searched for *.xml.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Corpus name stored on every sentence, e.g. bioscope-abstracts.
        #[arg(long)]
        corpus: Option<String>,
    },
    /// Seeded sentence-level train/dev/test split.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Comma-separated train,dev,test fractions.
        #[arg(long, default_value = "0.7,0.15,0.15")]
        ratios: String,
        /// Keep only punctuation-delimited (or only other) instances.
        #[arg(long, value_enum)]
        punct_subset: Option<Subset>,
        #[arg(long)]
        symbols: Option<String>,
    },
    /// Train a cue or scope tagger.
    Train {
        #[arg(long)]
        task: Option<String>,
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        dev: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        patience_epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        /// key=value file; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Evaluate checkpoints on test corpora (rows: test, columns: train).
    Evaluate {
        /// cue, scope-gold or scope-e2e.
        #[arg(long)]
        mode: String,
        /// Checkpoint per training corpus (scope checkpoints for scope modes).
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
        /// Cue checkpoints, paired with --checkpoint by training corpus (scope-e2e).
        #[arg(long = "cue-checkpoint")]
        cue_checkpoints: Vec<PathBuf>,
        #[arg(long = "test", required = true)]
        tests: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// PCS on punctuation-delimited vs other scopes.
    PunctAnalysis {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        symbols: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parse arguments and run; returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest {
            format,
            input,
            out,
            corpus,
        } => {
            let summary = commands::ingest(format, &input, &out, corpus.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&summary).map_err(runtime)?);
            Ok(())
        }
        Command::Split {
            input,
            out,
            seed,
            ratios,
            punct_subset,
            symbols,
        } => {
            let splits = commands::split(&input, &out, seed, &ratios, punct_subset, symbols.as_deref())?;
            println!(
                "train {} / dev {} / test {} sentences (seed {seed})",
                splits.train.len(),
                splits.dev.len(),
                splits.test.len()
            );
            Ok(())
        }
        Command::Train {
            task,
            strategy,
            backend,
            train,
            dev,
            seed,
            max_len,
            out,
            learning_rate,
            max_epochs,
            patience_epochs,
            batch_size,
            config,
        } => {
            let mut flags = Overrides::default();
            flags.set("task", task);
            flags.set("strategy", strategy);
            flags.set("backend", backend);
            flags.set("train", train.map(|p| p.display().to_string()));
            flags.set("dev", dev.map(|p| p.display().to_string()));
            flags.set("seed", seed);
            flags.set("max_len", max_len);
            flags.set("out", out.map(|p| p.display().to_string()));
            flags.set("learning_rate", learning_rate);
            flags.set("max_epochs", max_epochs);
            flags.set("patience_epochs", patience_epochs);
            flags.set("batch_size", batch_size);
            let layered = match config {
                Some(path) => Overrides::from_file(&path)?.merged(flags),
                None => flags,
            };
            let cfg = ExperimentConfig::resolve(&layered)?;
            let history = commands::train(&cfg)?;
            println!(
                "best dev F1 {:.4} at epoch {} of {}{}",
                history.best_f1(),
                history.best_epoch,
                history.epochs.len(),
                if history.stopped_early { " (stopped early)" } else { "" }
            );
            Ok(())
        }
        Command::Evaluate {
            mode,
            checkpoints,
            cue_checkpoints,
            tests,
            out,
        } => {
            let matrix = commands::evaluate(&mode, &checkpoints, &cue_checkpoints, &tests, &out)?;
            print!("{}", matrix.to_table());
            Ok(())
        }
        Command::PunctAnalysis {
            checkpoint,
            test,
            symbols,
            out,
        } => {
            let report = commands::punct_analysis(&checkpoint, &test, symbols.as_deref(), out.as_deref())?;
            print!("{}", report.to_table());
            Ok(())
        }
    }
}

pub use commands::{evaluate, ingest, punct_analysis, split, train, IngestSummary};
