//! `surveyq`: prepare data, train the adaptive (RL) and fixed-question (SL)
//! models, compare them, check them against the exact oracle, and run
//! questionnaires in the terminal or over HTTP.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 training divergence.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use surveyq_core::{NetError, TrainError};
use thiserror::Error;

/// Invalid flag values or combinations (exit code 1).
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "surveyq", version, about = "Adaptive questionnaire agent", propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a labelled CSV, rank features by χ² association with the label,
    /// and split into train/test. Reproducible from --seed.
    Prepare(PrepareArgs),
    /// Draw a synthetic dataset from a generating spec and prepare it like
    /// `prepare` (the generating spec file is copied alongside). Reproducible from --seed.
    Synth(SynthArgs),
    /// Train the adaptive Q-network agent. Reproducible from --seed.
    TrainRl(TrainRlArgs),
    /// Train the fixed-question classifier on the top-k ranked features.
    /// Reproducible from --seed.
    TrainSl(TrainSlArgs),
    /// Compare models on class-balanced test episodes and print the
    /// accuracy / queries / reward table. Reproducible from --seed.
    Eval(EvalArgs),
    /// Solve a synthetic spec exactly: optimal value and policy tree, or the
    /// gap between a trained model and the optimum. Deterministic.
    Oracle(OracleArgs),
    /// Run one questionnaire interactively in the terminal.
    Survey(SurveyArgs),
    /// Serve models as HTTP questionnaires (and optional static web assets).
    Serve(ServeArgs),
    /// Emit reward-curve series (step, train return, eval return) from a
    /// training log. Deterministic.
    Curves(CurvesArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Labelled CSV: one column per schema feature plus `label`.
    #[arg(long)]
    pub csv: PathBuf,
    /// Schema JSON describing the categorical features.
    #[arg(long)]
    pub schema: PathBuf,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    pub test_frac: f64,
    /// Seed for the train/test split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generating spec JSON (class prior and per-class answer distributions).
    #[arg(long)]
    pub spec: PathBuf,
    /// Number of records to draw.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Seed for drawing records.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    pub test_frac: f64,
    /// Seed for the train/test split.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainRlArgs {
    /// Prepared dataset directory (from `prepare` or `synth`).
    #[arg(long)]
    pub data: PathBuf,
    /// Query budget; the agent may ask the top-kmax ranked features. At least 2.
    #[arg(long)]
    pub kmax: usize,
    /// Output model directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Trainer settings file (JSON or TOML, any subset of fields); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Environment steps.
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Steps over which ε anneals from 1 to 0.01.
    #[arg(long)]
    pub eps_horizon: Option<u64>,
    /// Steps between greedy evaluations on training data.
    #[arg(long)]
    pub eval_every: Option<u64>,
    /// Restrict exploration and greedy choice to valid actions.
    #[arg(long)]
    pub mask_actions: bool,
    /// Keep the final weights instead of the best-evaluated ones.
    #[arg(long)]
    pub keep_last: bool,
    /// No progress lines on stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct TrainSlArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Number of fixed questions (top-k ranked features). At least 2.
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Trainer settings file (JSON or TOML, any subset of fields); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prepared dataset directory; its test split is used.
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated model directories, printed in this order.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub models: Vec<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    pub episodes: usize,
    /// Seed for drawing test episodes (shared by all models).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write full-precision rows as TSV to this file.
    #[arg(long)]
    pub tsv: Option<PathBuf>,
    /// Let RL models choose only valid actions (default: plain greedy).
    #[arg(long)]
    pub masked: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Generating spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// Query budget. Without --check the queryable features are the top-kmax
    /// by expected χ² rank (or by the ranking in --data).
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Take the feature ranking from this prepared dataset.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Compare this trained model's exact value with the optimum (uses the
    /// model's own budget and features).
    #[arg(long)]
    pub check: Option<PathBuf>,
    /// Omit the policy tree.
    #[arg(long)]
    pub no_tree: bool,
}

#[derive(Debug, Args)]
pub struct SurveyArgs {
    /// Model directory.
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Service settings file (JSON or TOML); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory of model directories; each subdirectory name is a model id.
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Address to bind, e.g. 127.0.0.1:8080.
    #[arg(long)]
    pub listen: Option<String>,
    /// Web client assets served outside the API paths.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    /// Idle seconds before a session expires.
    #[arg(long)]
    pub session_ttl: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Training log file, or a model directory containing one.
    #[arg(long)]
    pub log: PathBuf,
    /// Moving-average window over training episode returns.
    #[arg(long, default_value_t = 100)]
    pub window: usize,
    /// Write the series here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    let diverged = err.chain().any(|e| {
        matches!(e.downcast_ref::<TrainError>(), Some(TrainError::Divergence { .. }))
            || matches!(e.downcast_ref::<NetError>(), Some(NetError::Divergence { .. }))
    });
    if diverged {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Prepare(a) => commands::prepare(a),
        Command::Synth(a) => commands::synth(a),
        Command::TrainRl(a) => commands::train_rl(a),
        Command::TrainSl(a) => commands::train_sl(a),
        Command::Eval(a) => commands::eval(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::Survey(a) => commands::survey(a),
        Command::Serve(a) => commands::serve(a),
        Command::Curves(a) => commands::curves(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
