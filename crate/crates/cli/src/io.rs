use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use ldatune_core::features::read_feature_csv;
use ldatune_core::portfolio::PerformanceMatrix;
use ldatune_core::preprocess::read_corpus;
use ldatune_core::{Corpus, FeatureRow};

use crate::error::{input_error, InputContext};

pub fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).input(format_args!("reading {}", path.display()))
}

/// Corpus files named explicitly plus every `*.corpus` in `dir`, sorted.
pub fn corpus_paths(files: &[PathBuf], dir: Option<&Path>) -> anyhow::Result<Vec<PathBuf>> {
    let mut paths = files.to_vec();
    if let Some(dir) = dir {
        let mut found: Vec<PathBuf> = fs::read_dir(dir)
            .input(format_args!("reading {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "corpus"))
            .collect();
        found.sort();
        paths.extend(found);
    }
    if paths.is_empty() {
        return Err(input_error("no corpus files given (use --corpus or --corpus-dir)"));
    }
    Ok(paths)
}

pub fn load_corpora(paths: &[PathBuf]) -> anyhow::Result<Vec<Corpus>> {
    paths.iter().map(|p| read_corpus(p).input(format_args!("{}", p.display()))).collect()
}

pub fn load_features(path: &Path) -> anyhow::Result<Vec<FeatureRow>> {
    let file = File::open(path).input(format_args!("opening {}", path.display()))?;
    read_feature_csv(file).input(format_args!("{}", path.display()))
}

pub fn load_matrix(path: &Path) -> anyhow::Result<PerformanceMatrix> {
    let file = File::open(path).input(format_args!("opening {}", path.display()))?;
    PerformanceMatrix::read_csv(file).input(format_args!("{}", path.display()))
}

/// Feature rows in the order of `corpus_ids`.
pub fn align_features(rows: &[FeatureRow], corpus_ids: &[String]) -> anyhow::Result<Vec<ldatune_core::FeatureVector>> {
    corpus_ids
        .iter()
        .map(|id| {
            rows.iter()
                .find(|r| &r.corpus_id == id)
                .map(|r| r.features)
                .ok_or_else(|| input_error(format!("no feature row for corpus {id:?}")))
        })
        .collect()
}
