pub mod analyze;
pub mod features;
pub mod lda;
pub mod portfolio;
pub mod preprocess;
pub mod tune;

use std::path::PathBuf;

use ldatune_core::lda::EvalSettings;
use ldatune_core::Stoplist;

use crate::config::Config;
use crate::error::InputContext;

/// Flags shared by every command that trains LDA models for evaluation.
#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Gibbs sweeps per training run [default: 1000]
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Fraction of documents held out for perplexity [default: 0.1]
    #[arg(long)]
    pub heldout_fraction: Option<f64>,
    /// Fold-in sweeps per held-out document [default: 50]
    #[arg(long)]
    pub fold_in_sweeps: Option<usize>,
}

impl EvalArgs {
    pub fn resolve(&self, config: &Config) -> anyhow::Result<EvalSettings> {
        let d = EvalSettings::default();
        let s = EvalSettings {
            iterations: config.or(self.iterations, "iterations", d.iterations)?,
            heldout_fraction: config.or(self.heldout_fraction, "heldout-fraction", d.heldout_fraction)?,
            fold_in_sweeps: config.or(self.fold_in_sweeps, "fold-in-sweeps", d.fold_in_sweeps)?,
        };
        if !(s.heldout_fraction > 0.0 && s.heldout_fraction < 1.0) {
            return Err(crate::error::input_error("--heldout-fraction must lie strictly between 0 and 1"));
        }
        Ok(s)
    }
}

pub fn stoplist(path: Option<PathBuf>, config: &Config) -> anyhow::Result<Stoplist> {
    match config.pick(path, "stopwords")? {
        Some(p) => Stoplist::load(&p).input(format_args!("stopwords {}", p.display())),
        None => Ok(Stoplist::english()),
    }
}
