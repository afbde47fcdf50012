use std::path::PathBuf;

use ldatune_core::preprocess::{ingest_directory, write_corpus};
use ldatune_core::Source;

use crate::config::Config;
use crate::error::{input_error, InputContext};
use crate::io::create;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// github or stackoverflow
    #[arg(long)]
    source: Option<Source>,
    /// Directory of raw exports; subdirectories are language groups
    #[arg(long = "in", value_name = "DIR")]
    input: Option<PathBuf>,
    /// Output directory for corpus files and logs
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Language of files directly in the input directory
    #[arg(long)]
    language: Option<String>,
    /// Documents per corpus file [default: 1000]
    #[arg(long)]
    group_size: Option<usize>,
}

pub fn run(a: Args, config: &Config) -> anyhow::Result<()> {
    let source: Source = config.require(a.source, "source")?;
    let input: PathBuf = config.require(a.input, "in")?;
    let out: PathBuf = config.require(a.out, "out")?;
    let language: String = config.or(a.language, "language", "unknown".to_string())?;
    let group_size: usize = config.or(a.group_size, "group-size", 1000)?;
    if !input.is_dir() {
        return Err(input_error(format!("input directory {} does not exist", input.display())));
    }
    let outcome = ingest_directory(&input, source, &language, group_size).input(format_args!("{}", input.display()))?;
    if outcome.inputs == 0 {
        return Err(input_error("no input documents"));
    }
    std::fs::create_dir_all(&out)?;
    for corpus in &outcome.corpora {
        write_corpus(&out, corpus)?;
    }
    let mut rejects = csv_writer(&out, "rejects.csv")?;
    rejects.write_record(["id", "reason"])?;
    for r in &outcome.rejects {
        rejects.write_record([&r.id, &r.reason])?;
    }
    rejects.flush()?;
    let mut warnings = csv_writer(&out, "warnings.csv")?;
    warnings.write_record(["document", "kind", "offset"])?;
    for w in &outcome.warnings {
        warnings.write_record([w.document.clone(), serde_json::to_value(w.kind)?.as_str().unwrap_or_default().to_string(), w.offset.to_string()])?;
    }
    warnings.flush()?;
    for s in &outcome.skipped {
        eprintln!("warning: skipped {}: {}", s.path.display(), s.error);
    }
    println!(
        "accepted {} rejected {} skipped {} corpora {} warnings {}",
        outcome.accepted(),
        outcome.rejects.len(),
        outcome.skipped.len(),
        outcome.corpora.len(),
        outcome.warnings.len()
    );
    Ok(())
}

fn csv_writer(dir: &std::path::Path, name: &str) -> anyhow::Result<csv::Writer<std::io::BufWriter<std::fs::File>>> {
    Ok(csv::Writer::from_writer(create(&dir.join(name))?))
}
