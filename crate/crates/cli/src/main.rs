//! `ldatune`: clean repository text, fingerprint corpora, tune LDA and
//! select configurations from corpus features.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::error::exit_code;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "LDATUNE_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "ldatune", version, about = "Per-corpus LDA configuration pipeline")]
struct Cli {
    /// Worker threads [default: $LDATUNE_WORKERS, else all cores]
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// JSON object whose keys mirror long flag names; flags win
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean raw exports into corpus files
    Preprocess(commands::preprocess::Args),
    /// Compute the 24 corpus features
    Features(commands::features::Args),
    /// Train or score LDA models
    #[command(subcommand)]
    Lda(commands::lda::LdaCommand),
    /// Tune (k, alpha, beta) for one corpus by iterated racing
    Tune(commands::tune::Args),
    /// Performance matrix, selector training and prediction
    #[command(subcommand)]
    Portfolio(commands::portfolio::PortfolioCommand),
    /// Correlations, projection, clustering and hardness
    #[command(subcommand)]
    Analyze(commands::analyze::AnalyzeCommand),
}

fn worker_count(cli: &Cli, config: &Config) -> anyhow::Result<usize> {
    if let Some(n) = config.pick(cli.workers, "workers")? {
        return Ok(n.max(1));
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return v
            .trim()
            .parse::<usize>()
            .map(|n| n.max(1))
            .map_err(|_| error::input_error(format!("{WORKERS_ENV}: not a positive integer: {v:?}")));
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = Config::load(cli.config.as_deref())?;
    let workers = worker_count(&cli, &config)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    pool.install(|| match cli.command {
        Command::Preprocess(a) => commands::preprocess::run(a, &config),
        Command::Features(a) => commands::features::run(a, &config),
        Command::Lda(c) => commands::lda::run(c, &config),
        Command::Tune(a) => commands::tune::run(a, &config),
        Command::Portfolio(c) => commands::portfolio::run(c, &config),
        Command::Analyze(c) => commands::analyze::run(c, &config),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
