use std::path::PathBuf;

use clap::Subcommand;
use ldatune_core::lda::{evaluate_config, heldout_perplexity, train, RunOutcome};
use ldatune_core::{LdaConfig, TopicParams, TrainedModel};
use serde::Serialize;

use super::EvalArgs;
use crate::config::Config;
use crate::error::{input_error, InputContext};
use crate::io::{read_text, write_text};

#[derive(Debug, Subcommand)]
pub enum LdaCommand {
    /// Train on every document of a corpus and save the model
    Train(TrainArgs),
    /// Held-out perplexity of a configuration, or of a saved model
    Perplexity(PerplexityArgs),
}

#[derive(Debug, clap::Args)]
pub struct ParamArgs {
    /// Number of topics [default: 100]
    #[arg(long)]
    k: Option<usize>,
    /// Document-topic prior [default: 1.0]
    #[arg(long)]
    alpha: Option<f64>,
    /// Topic-word prior [default: 0.01]
    #[arg(long)]
    beta: Option<f64>,
}

impl ParamArgs {
    fn resolve(&self, config: &Config) -> anyhow::Result<TopicParams> {
        let d = TopicParams::DEFAULT;
        let p = TopicParams::new(
            config.or(self.k, "k", d.k)?,
            config.or(self.alpha, "alpha", d.alpha)?,
            config.or(self.beta, "beta", d.beta)?,
        );
        p.validate().input("parameters")?;
        Ok(p)
    }
}

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
    /// Gibbs sweeps [default: 1000]
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output model JSON
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct PerplexityArgs {
    /// Corpus to evaluate on (split for training unless --model is given)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Score the whole corpus as held-out data under this saved model
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    eval: EvalArgs,
    /// Independent runs; the median is reported [default: 1]
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output JSON with every run
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

pub fn run(c: LdaCommand, config: &Config) -> anyhow::Result<()> {
    match c {
        LdaCommand::Train(a) => train_cmd(a, config),
        LdaCommand::Perplexity(a) => perplexity_cmd(a, config),
    }
}

fn load_tokens(path: Option<PathBuf>, config: &Config) -> anyhow::Result<Vec<Vec<String>>> {
    let path: PathBuf = config.require(path, "corpus")?;
    let corpus = crate::io::load_corpora(&[path])?.remove(0);
    Ok(corpus.tokenized())
}

fn train_cmd(a: TrainArgs, config: &Config) -> anyhow::Result<()> {
    let params = a.params.resolve(config)?;
    let iterations = config.or(a.iterations, "iterations", LdaConfig::DEFAULT_ITERATIONS)?;
    let seed = config.or(a.seed, "seed", 0)?;
    let out: PathBuf = config.require(a.out, "out")?;
    let docs = load_tokens(a.corpus, config)?;
    let model = train(&docs, &LdaConfig::new(params, iterations, seed)).input("training")?;
    write_text(&out, &model.to_json()?)?;
    println!(
        "trained k={} alpha={} beta={} on {} documents, {} tokens, vocabulary {}",
        params.k,
        params.alpha,
        params.beta,
        model.num_documents(),
        model.total_tokens(),
        model.vocab().len()
    );
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct PerplexityOutput {
    params: TopicParams,
    median: f64,
    perplexities: Vec<f64>,
    crashed: usize,
}

fn perplexity_cmd(a: PerplexityArgs, config: &Config) -> anyhow::Result<()> {
    let seed = config.or(a.seed, "seed", 0)?;
    let docs = load_tokens(a.corpus, config)?;
    let out: Option<PathBuf> = config.pick(a.out, "out")?;
    let result = if let Some(model_path) = config.pick(a.model, "model")? {
        let model = TrainedModel::from_json(&read_text(&model_path)?).input(format_args!("{}", model_path.display()))?;
        let fold_in = a.eval.resolve(config)?.fold_in_sweeps;
        let e = heldout_perplexity(&model, &docs, fold_in, seed).input("scoring")?;
        PerplexityOutput { params: model.config().params(), median: e.perplexity, perplexities: vec![e.perplexity], crashed: 0 }
    } else {
        let params = a.params.resolve(config)?;
        let settings = a.eval.resolve(config)?;
        let runs: usize = config.or(a.runs, "runs", 1)?;
        if runs == 0 {
            return Err(input_error("--runs must be at least 1"));
        }
        let e = evaluate_config(&docs, params, runs, &settings, seed).input("evaluation")?;
        for r in &e.runs {
            if let RunOutcome::Crashed(msg) = r {
                eprintln!("warning: run crashed: {msg}");
            }
        }
        PerplexityOutput { params, median: e.median, perplexities: e.perplexities(), crashed: e.crashed() }
    };
    println!("perplexity {:.4}", result.median);
    if let Some(out) = out {
        write_text(&out, &(serde_json::to_string_pretty(&result)? + "\n"))?;
    }
    Ok(())
}
