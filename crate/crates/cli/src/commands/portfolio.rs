use std::path::PathBuf;

use clap::Subcommand;
use ldatune_core::portfolio::{
    build_performance_matrix, evaluate_selector, train_selector, write_importance_csv, ForestParams, PerformanceMatrix,
    SelectorModel,
};
use ldatune_core::TopicParams;
use serde::Deserialize;

use super::EvalArgs;
use crate::config::Config;
use crate::error::{input_error, InputContext};
use crate::io::{align_features, corpus_paths, create, load_corpora, load_features, load_matrix, read_text, write_text};

#[derive(Debug, Subcommand)]
pub enum PortfolioCommand {
    /// Evaluate every configuration on every corpus
    Matrix(MatrixArgs),
    /// Train the pairwise selector on a matrix and feature table
    Train(TrainArgs),
    /// Print the selected configuration for every feature row
    Predict(PredictArgs),
    /// Leave-one-out evaluation with baselines and feature importance
    Report(ReportArgs),
}

#[derive(Debug, clap::Args)]
pub struct MatrixArgs {
    /// JSON array of {"id", "k", "alpha", "beta"}
    #[arg(long, value_name = "FILE")]
    configs: Option<PathBuf>,
    /// Append the (100, 1.0, 0.01) configuration as `default`
    #[arg(long)]
    include_default: bool,
    #[arg(long)]
    corpus: Vec<PathBuf>,
    #[arg(long, value_name = "DIR")]
    corpus_dir: Option<PathBuf>,
    /// Runs per cell; the cell holds their median [default: 101]
    #[arg(long)]
    runs: Option<usize>,
    #[command(flatten)]
    eval: EvalArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ForestArgs {
    /// Trees per pairwise forest [default: 100]
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ForestArgs {
    fn resolve(&self, config: &Config) -> anyhow::Result<(ForestParams, u64)> {
        let d = ForestParams::default();
        let trees: usize = config.or(self.trees, "trees", d.trees)?;
        if trees == 0 {
            return Err(input_error("--trees must be at least 1"));
        }
        Ok((ForestParams { trees, ..d }, config.or(self.seed, "seed", 0)?))
    }
}

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    matrix: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    features: Option<PathBuf>,
    #[command(flatten)]
    forest: ForestArgs,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    selector: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    features: Option<PathBuf>,
    /// Also write `corpusId,configId` CSV here
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    #[arg(long, value_name = "FILE")]
    matrix: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    features: Option<PathBuf>,
    /// Configuration id reported as the default baseline
    #[arg(long, value_name = "ID")]
    default: Option<String>,
    #[command(flatten)]
    forest: ForestArgs,
    /// Directory for selection.csv, selection.txt and importance.csv
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

pub fn run(c: PortfolioCommand, config: &Config) -> anyhow::Result<()> {
    match c {
        PortfolioCommand::Matrix(a) => matrix_cmd(a, config),
        PortfolioCommand::Train(a) => train_cmd(a, config),
        PortfolioCommand::Predict(a) => predict_cmd(a, config),
        PortfolioCommand::Report(a) => report_cmd(a, config),
    }
}

#[derive(Deserialize)]
struct NamedConfig {
    id: String,
    k: usize,
    alpha: f64,
    beta: f64,
}

fn matrix_cmd(a: MatrixArgs, config: &Config) -> anyhow::Result<()> {
    let path: PathBuf = config.require(a.configs, "configs")?;
    let named: Vec<NamedConfig> =
        serde_json::from_str(&read_text(&path)?).input(format_args!("{}", path.display()))?;
    let mut configs: Vec<(String, TopicParams)> =
        named.into_iter().map(|c| (c.id, TopicParams::new(c.k, c.alpha, c.beta))).collect();
    if config.or(Some(a.include_default).filter(|b| *b), "include-default", false)? {
        configs.push(("default".into(), TopicParams::DEFAULT));
    }
    for (id, p) in &configs {
        p.validate().input(format_args!("config {id}"))?;
    }
    let files: Vec<PathBuf> = config.or(Some(a.corpus).filter(|c| !c.is_empty()), "corpus", Vec::new())?;
    let dir: Option<PathBuf> = config.pick(a.corpus_dir, "corpus-dir")?;
    let corpora: Vec<(String, Vec<Vec<String>>)> =
        load_corpora(&corpus_paths(&files, dir.as_deref())?)?.into_iter().map(|c| (c.id.clone(), c.tokenized())).collect();
    let runs: usize = config.or(a.runs, "runs", 101)?;
    if runs == 0 {
        return Err(input_error("--runs must be at least 1"));
    }
    let settings = a.eval.resolve(config)?;
    let seed = config.or(a.seed, "seed", 0)?;
    let out: PathBuf = config.require(a.out, "out")?;
    let m = build_performance_matrix(&configs, &corpora, runs, &settings, seed).input("performance matrix")?;
    m.write_csv(create(&out)?)?;
    println!(
        "wrote {} configs x {} corpora to {} ({} crashed cells imputed)",
        m.n_configs(),
        m.n_corpora(),
        out.display(),
        m.crash_count()
    );
    Ok(())
}

fn inputs(
    matrix: Option<PathBuf>,
    features: Option<PathBuf>,
    config: &Config,
) -> anyhow::Result<(PerformanceMatrix, Vec<ldatune_core::FeatureVector>)> {
    let m = load_matrix(&config.require::<PathBuf>(matrix, "matrix")?)?;
    let rows = load_features(&config.require::<PathBuf>(features, "features")?)?;
    let fv = align_features(&rows, &m.corpus_ids)?;
    Ok((m, fv))
}

fn train_cmd(a: TrainArgs, config: &Config) -> anyhow::Result<()> {
    let (m, fv) = inputs(a.matrix, a.features, config)?;
    let (params, seed) = a.forest.resolve(config)?;
    let out: PathBuf = config.require(a.out, "out")?;
    let s = train_selector(&fv, &m, &params, seed).input("selector")?;
    write_text(&out, &(s.to_json() + "\n"))?;
    println!("trained {} pairwise models over {} configs", s.pairs.len(), s.config_ids.len());
    Ok(())
}

fn predict_cmd(a: PredictArgs, config: &Config) -> anyhow::Result<()> {
    let path: PathBuf = config.require(a.selector, "selector")?;
    let selector = SelectorModel::from_json(&read_text(&path)?).input(format_args!("{}", path.display()))?;
    let rows = load_features(&config.require::<PathBuf>(a.features, "features")?)?;
    let out: Option<PathBuf> = config.pick(a.out, "out")?;
    let mut lines = String::from("corpusId,configId\n");
    for r in &rows {
        let choice = selector.select(&r.features).input(format_args!("corpus {}", r.corpus_id))?;
        lines.push_str(&format!("{},{}\n", r.corpus_id, choice));
    }
    print!("{lines}");
    if let Some(out) = out {
        write_text(&out, &lines)?;
    }
    Ok(())
}

fn report_cmd(a: ReportArgs, config: &Config) -> anyhow::Result<()> {
    let (m, fv) = inputs(a.matrix, a.features, config)?;
    let (params, seed) = a.forest.resolve(config)?;
    let default: Option<String> = config.pick(a.default, "default")?;
    let default = default.or_else(|| m.config_index("default").map(|_| "default".to_string()));
    let out: PathBuf = config.require(a.out, "out")?;
    let report = evaluate_selector(&fv, &m, &params, seed, default.as_deref()).input("selector evaluation")?;
    report.write_csv(create(&out.join("selection.csv"))?)?;
    write_importance_csv(create(&out.join("importance.csv"))?, &report.importances)?;
    let table = report.render_table();
    write_text(&out.join("selection.txt"), &table)?;
    print!("{table}");
    Ok(())
}
