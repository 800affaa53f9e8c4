//! `slice`: score, report, validate, prompt, difficulty and extract.

mod commands;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slice_lineage::corpus::Strategy;

#[derive(Debug, Parser)]
#[command(name = "slice", version, about = "Score and prepare schema lineage extractions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score prediction files against gold lineages.
    Score(ScoreArgs),
    /// Combine score reports into a model x strategy table and plot data.
    Report(ReportArgs),
    /// Check every gold record and print per-line findings.
    Validate(ValidateArgs),
    /// Write the prompt for every script of a corpus.
    Prompt(PromptArgs),
    /// Print difficulty labels for a corpus.
    Difficulty(DifficultyArgs),
    /// Query a chat-completion endpoint and write prediction records.
    Extract(ExtractArgs),
}

#[derive(Debug, Args)]
#[group(multiple = false)]
struct SyntaxFlags {
    /// Answer dictionaries must be strict JSON.
    #[arg(long)]
    strict: bool,
    /// Accept JSON5 answer dictionaries (single quotes, trailing commas).
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Gold JSONL; defaults to the corpus gold file when --corpus is given.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Prediction JSONL; repeat once per trial file.
    #[arg(long = "pred", required = true)]
    predictions: Vec<PathBuf>,
    /// Evaluation config (TOML); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus directory or manifest, used for difficulty strata.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Model label recorded in the report.
    #[arg(long)]
    model: Option<String>,
    /// Prompting strategy label recorded in the report.
    #[arg(long)]
    strategy: Option<Strategy>,
    #[command(flatten)]
    syntax: SyntaxFlags,
    /// Worker threads for scoring.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Score reports (report.json files or score output directories).
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    gold: PathBuf,
    /// Also check that every gold script exists in this corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PromptArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    strategy: Strategy,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DifficultyArgs {
    #[arg(long)]
    corpus: PathBuf,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Gold JSONL listing the tasks; defaults to the corpus gold file.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Endpoint config (TOML). The API key is read from the environment
    /// variable it names.
    #[arg(long)]
    endpoint: PathBuf,
    #[arg(long)]
    strategy: Strategy,
    #[arg(long, default_value = "0")]
    trial_id: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Prediction JSONL to write.
    #[arg(long)]
    out: PathBuf,
    /// Concurrent requests; overrides the endpoint config.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Score(a) => commands::score(a),
        Command::Report(a) => commands::report(a),
        Command::Validate(a) => commands::validate(a),
        Command::Prompt(a) => commands::prompt(a),
        Command::Difficulty(a) => commands::difficulty(a),
        Command::Extract(a) => commands::extract(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", render_error(&err));
            ExitCode::from(exit::code_for(&err))
        }
    }
}

/// Error chain joined with `: `, skipping causes already quoted by the
/// message above them.
fn render_error(err: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut previous = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !previous.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
        previous = text;
    }
    out
}
