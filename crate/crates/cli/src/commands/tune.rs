use std::path::PathBuf;

use ldatune_core::tuner::{tune, LdaObjective, ParamSpace, TuneSettings};

use super::EvalArgs;
use crate::config::Config;
use crate::error::{input_error, InputContext};
use crate::io::write_text;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// LDA runs available to the races [default: 10000]
    #[arg(long)]
    budget: Option<usize>,
    /// Final-phase runs per elite [default: 101]
    #[arg(long)]
    runs: Option<usize>,
    /// Configurations kept per race [default: 5]
    #[arg(long)]
    elites: Option<usize>,
    #[command(flatten)]
    eval: EvalArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Output report JSON
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Also write the text rendering here
    #[arg(long, value_name = "FILE")]
    text: Option<PathBuf>,
}

pub fn run(a: Args, config: &Config) -> anyhow::Result<()> {
    let corpus: PathBuf = config.require(a.corpus, "corpus")?;
    let d = TuneSettings::default();
    let settings = TuneSettings {
        total_budget: config.or(a.budget, "budget", d.total_budget)?,
        final_runs: config.or(a.runs, "runs", d.final_runs)?,
        elite_count: config.or(a.elites, "elites", d.elite_count)?,
        ..d
    };
    if settings.final_runs == 0 || settings.elite_count == 0 {
        return Err(input_error("--runs and --elites must be at least 1"));
    }
    let seed = config.or(a.seed, "seed", 0)?;
    let out: Option<PathBuf> = config.pick(a.out, "out")?;
    let text: Option<PathBuf> = config.pick(a.text, "text")?;
    let documents = crate::io::load_corpora(&[corpus])?.remove(0).tokenized();
    let objective = LdaObjective { documents, settings: a.eval.resolve(config)? };
    let report = tune(&objective, &ParamSpace::default(), &settings, seed).input("tuning")?;
    let rendered = report.render_text();
    print!("{rendered}");
    if let Some(out) = out {
        write_text(&out, &(report.to_json() + "\n"))?;
    }
    if let Some(text) = text {
        write_text(&text, &rendered)?;
    }
    Ok(())
}
