use std::path::PathBuf;

use ldatune_core::features::write_feature_csv;
use ldatune_core::FeatureRow;
use rayon::prelude::*;

use crate::config::Config;
use crate::error::InputContext;
use crate::io::{corpus_paths, create, load_corpora};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Corpus file (repeatable)
    #[arg(long)]
    corpus: Vec<PathBuf>,
    /// Directory whose `*.corpus` files are all included
    #[arg(long, value_name = "DIR")]
    corpus_dir: Option<PathBuf>,
    /// Stopword list, one word per line [default: built-in English list]
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
    /// Output CSV
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

pub fn run(a: Args, config: &Config) -> anyhow::Result<()> {
    let files: Vec<PathBuf> = config.or(Some(a.corpus).filter(|c| !c.is_empty()), "corpus", Vec::new())?;
    let dir: Option<PathBuf> = config.pick(a.corpus_dir, "corpus-dir")?;
    let out: PathBuf = config.require(a.out, "out")?;
    let stoplist = super::stoplist(a.stopwords, config)?;
    let corpora = load_corpora(&corpus_paths(&files, dir.as_deref())?)?;
    let rows = corpora
        .par_iter()
        .map(|c| FeatureRow::from_corpus(c, &stoplist).input(format_args!("corpus {}", c.id)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    write_feature_csv(create(&out)?, &rows)?;
    println!("wrote {} feature rows to {}", rows.len(), out.display());
    Ok(())
}
