//! `triplerank` command line: prepare a corpus, train paragraph vectors,
//! score candidate values, evaluate against gold labels.
//!
//! Every setting can come from a flag or from a `--config` file whose keys
//! mirror the long flag names; flags win. Progress goes to stderr, data goes
//! to files, and the eval report goes to stdout. Exit status is zero exactly
//! when the command finished without errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use triplerank::corpus::CorpusError;
use triplerank::embedding::{EmbedError, ModelIoError};
use triplerank::evaluation::EvalError;
use triplerank::mapping::MapError;
use triplerank::scoring::ScoreError;

mod commands;
mod config;
mod files;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    ModelIo(#[from] ModelIoError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Parser)]
#[command(
    name = "triplerank",
    version,
    about = "score how relevant each value of a knowledge-base property is to a person"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build per-person documents and balanced value groups from triples and sentences
    Prepare(PrepareArgs),
    /// Train paragraph vectors over a prepared corpus
    Train(TrainArgs),
    /// Score candidate values for every multi-valued subject
    Score(ScoreArgs),
    /// Compare a scores file against gold labels
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct SharedArgs {
    /// Config file with key=value lines; flags take precedence
    #[arg(long, global = false, value_name = "FILE")]
    config: Option<String>,
    /// Seed for shuffling, initialisation and sampling
    #[arg(long, value_name = "N")]
    seed: Option<String>,
    /// Worker threads for training
    #[arg(long, value_name = "N")]
    workers: Option<String>,
}

#[derive(Debug, Args)]
struct PrepareArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// subject<TAB>value triples file
    #[arg(long, value_name = "FILE")]
    triples: Option<String>,
    /// subject<TAB>sentence text file
    #[arg(long, value_name = "FILE")]
    sentences: Option<String>,
    /// Property the triples assert: profession or nationality
    #[arg(long, value_name = "NAME")]
    property: Option<String>,
    /// Minimum group size before enrichment kicks in
    #[arg(long, value_name = "N")]
    floor: Option<String>,
    /// Maximum group size; larger groups are truncated
    #[arg(long, value_name = "N")]
    cap: Option<String>,
    /// Directory of <value>.txt fixture pages for enrichment
    #[arg(long, value_name = "DIR")]
    enrich_dir: Option<String>,
    /// Shuffle group members with the seed before truncation
    #[arg(long)]
    shuffle: bool,
    /// Output directory for the prepared corpus
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// Prepared corpus directory
    #[arg(long, value_name = "DIR")]
    corpus: Option<String>,
    /// Where to write the trained model
    #[arg(long, value_name = "FILE")]
    model: Option<String>,
    /// Training mode: dbow, dm-concat or dm-avg
    #[arg(long, value_name = "MODE")]
    mode: Option<String>,
    /// Embedding dimensionality
    #[arg(long, value_name = "N")]
    dim: Option<String>,
    /// Context window size to each side
    #[arg(long, value_name = "N")]
    window: Option<String>,
    /// Negative samples per prediction
    #[arg(long, value_name = "N")]
    negative: Option<String>,
    /// Training epochs
    #[arg(long, value_name = "N")]
    epochs: Option<String>,
    /// Drop tokens seen fewer times than this
    #[arg(long, value_name = "N")]
    min_count: Option<String>,
    /// Initial learning rate
    #[arg(long, value_name = "X")]
    initial_lr: Option<String>,
    /// Final learning rate
    #[arg(long, value_name = "X")]
    final_lr: Option<String>,
    /// In dbow mode, also train word vectors skip-gram style
    #[arg(long)]
    dbow_words: bool,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// Prepared corpus directory
    #[arg(long, value_name = "DIR")]
    corpus: Option<String>,
    /// Trained model file
    #[arg(long, value_name = "FILE")]
    model: Option<String>,
    /// Where to write the scores
    #[arg(long, value_name = "FILE")]
    scores: Option<String>,
    /// Scoring method: cossim or logreg
    #[arg(long, value_name = "NAME")]
    method: Option<String>,
    /// Score mapping: lin, log or range
    #[arg(long, value_name = "NAME")]
    mapping: Option<String>,
    /// Top of the integer score scale
    #[arg(long, value_name = "N")]
    max_score: Option<String>,
    /// Raw-score floor for the log mapping
    #[arg(long, value_name = "X")]
    log_floor: Option<String>,
    /// L2 penalty for the logreg method
    #[arg(long, value_name = "X")]
    logreg_reg: Option<String>,
    /// Gradient-descent iterations for the logreg method
    #[arg(long, value_name = "N")]
    logreg_iters: Option<String>,
    /// Learning rate for the logreg method
    #[arg(long, value_name = "X")]
    logreg_lr: Option<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// Scores file to evaluate
    #[arg(long, value_name = "FILE")]
    scores: Option<String>,
    /// Gold labels file
    #[arg(long, value_name = "FILE")]
    gold: Option<String>,
    /// Score difference still counted as accurate
    #[arg(long, value_name = "N")]
    delta: Option<String>,
    /// Row label in the report table
    #[arg(long, value_name = "NAME")]
    label: Option<String>,
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Prepare(args) => commands::cmd_prepare(args),
        Command::Train(args) => commands::cmd_train(args),
        Command::Score(args) => commands::cmd_score(args),
        Command::Eval(args) => commands::cmd_eval(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
