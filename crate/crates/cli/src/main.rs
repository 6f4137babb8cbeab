mod backend;
mod config;
mod documents;
mod evaluate;
mod obfuscate;
mod serve_check;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::CONFIG_HELP;

/// Exit codes shared by every subcommand.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const BACKEND: u8 = 2;
    pub const CONFORMANCE: u8 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("backend failure: {source}{}", checkpoint_note(.checkpoint))]
    Backend {
        source: obfusc_core::Error,
        checkpoint: Option<PathBuf>,
    },
    #[error("{0}")]
    Conformance(String),
}

fn checkpoint_note(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!(" (completed sentences saved to {}; rerun with --resume)", p.display()),
        None => String::new(),
    }
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Backend { .. } => exit::BACKEND,
            CliError::Conformance(_) => exit::CONFORMANCE,
        }
    }
}

impl From<obfusc_core::Error> for CliError {
    fn from(e: obfusc_core::Error) -> Self {
        if e.is_backend() {
            CliError::Backend { source: e, checkpoint: None }
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
pub fn print_stdout(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

pub fn io_error(what: &str, path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Usage(format!("cannot {what} {}: {e}", path.display()))
}

#[derive(Parser, Debug)]
#[command(name = "obfusc", version, about = "Authorship obfuscation by constrained paraphrase generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rewrite documents to conceal their author's style.
    Obfuscate(ObfuscateArgs),
    /// Score obfuscated documents against their originals.
    Evaluate(EvaluateArgs),
    /// Check that a scoring server honours the wire protocol.
    ServeCheck(ServeCheckArgs),
    /// Fit the nearest-centroid attribution baseline on a labelled corpus.
    TrainClassifier(TrainArgs),
    /// Print the default configuration file.
    Defaults,
}

#[derive(Args, Debug, Clone)]
pub struct BackendArgs {
    /// Scoring backend: `mock:PATH` for a table file or an http(s) URL of a
    /// scoring server.
    #[arg(long, env = "OBFUSC_BACKEND_URL")]
    pub backend: Option<String>,
    /// Candidate replacement words for stylometric rewriting, one per line.
    /// Defaults to the vocabulary of a mock backend.
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ObfuscateArgs {
    /// Plain text document, or JSONL with {"id", "text", "author"?} per line.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output JSONL, one record per document. The run manifest and the
    /// checkpoint are written next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long, long_help = CONFIG_HELP)]
    pub config: Option<PathBuf>,
    /// Filtering thresholds: amt, amt-stylo, blog or blog-stylo.
    #[arg(long)]
    pub preset: Option<String>,
    /// Root seed for all sampling [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sentences processed in parallel [default: available cores].
    #[arg(long)]
    pub workers: Option<usize>,
    /// Grid restriction as a comma list, e.g. `greedy,original,unordered,plain`
    /// [default: full].
    #[arg(long)]
    pub grid: Option<String>,
    /// Beam width for generation [default: 50].
    #[arg(long)]
    pub beam_width: Option<usize>,
    /// Write every scored candidate per sentence to this JSONL file.
    #[arg(long)]
    pub dump_candidates: Option<PathBuf>,
    /// Reuse sentences completed by an earlier run with the same settings.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Original documents as JSONL {"id", "text", "author"?}.
    #[arg(long)]
    pub original: PathBuf,
    /// Obfuscated documents as JSONL with "id" and "obfuscated" or "text".
    #[arg(long)]
    pub obfuscated: PathBuf,
    /// Write metrics as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Trained attribution classifier used for the drop rate.
    #[arg(long)]
    pub classifier: Option<PathBuf>,
    /// Use this drop rate instead of computing one.
    #[arg(long)]
    pub drop_rate: Option<f64>,
    /// Use this content-preservation score instead of computing one.
    #[arg(long)]
    pub nli: Option<f64>,
    /// Use this acceptability score instead of computing one.
    #[arg(long)]
    pub cola: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ServeCheckArgs {
    /// Base URL of the scoring server.
    #[arg(long, env = "OBFUSC_BACKEND_URL")]
    pub backend: String,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 30)]
    pub timeout: u64,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Labelled corpus as JSONL {"id", "text", "author"}.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Where to write the classifier file.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    let result = match cli.command {
        Command::Obfuscate(a) => obfuscate::run(&a),
        Command::Evaluate(a) => evaluate::run(&a),
        Command::ServeCheck(a) => serve_check::run(&a),
        Command::TrainClassifier(a) => evaluate::train(&a),
        Command::Defaults => config::print_defaults(),
    };
    match result {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("obfusc: {e}");
            ExitCode::from(e.code())
        }
    }
}
