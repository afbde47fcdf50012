use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::clean::{clean, filter_readme, CleanWarning};
use super::{Corpus, Document, PreprocessError, RawDocument, Source, PIPELINE_VERSION};

/// Companion metadata written next to every `.corpus` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorpusMeta {
    pub id: String,
    pub source: Source,
    pub language: String,
    pub document_count: usize,
    pub pipeline_version: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub document_ids: Vec<String>,
}

pub fn meta_path(corpus_path: &Path) -> PathBuf {
    corpus_path.with_extension("meta.json")
}

/// Writes `<dir>/<id>.corpus` and `<dir>/<id>.meta.json`; returns the corpus path.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<PathBuf, PreprocessError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.corpus", corpus.id));
    let mut out = BufWriter::new(fs::File::create(&path)?);
    for doc in &corpus.documents {
        debug_assert!(!doc.text.contains('\n'));
        out.write_all(doc.text.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    let meta = CorpusMeta {
        id: corpus.id.clone(),
        source: corpus.source,
        language: corpus.language.clone(),
        document_count: corpus.documents.len(),
        pipeline_version: corpus.pipeline_version,
        document_ids: corpus.documents.iter().map(|d| d.id.clone()).collect(),
    };
    let mut json = serde_json::to_string_pretty(&meta)?;
    json.push('\n');
    fs::write(meta_path(&path), json)?;
    Ok(path)
}

pub fn read_corpus(path: &Path) -> Result<Corpus, PreprocessError> {
    let invalid = |reason: String| PreprocessError::InvalidCorpusFile { path: path.display().to_string(), reason };
    let text = fs::read_to_string(path)?;
    let mpath = meta_path(path);
    let meta_text = fs::read_to_string(&mpath)
        .map_err(|e| invalid(format!("cannot read metadata {}: {e}", mpath.display())))?;
    let meta: CorpusMeta = serde_json::from_str(&meta_text).map_err(|e| {
        invalid(format!("metadata {} line {} column {}: {e}", mpath.display(), e.line(), e.column()))
    })?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != meta.document_count {
        return Err(invalid(format!(
            "metadata declares {} documents but the file has {} lines",
            meta.document_count,
            lines.len()
        )));
    }
    if !meta.document_ids.is_empty() && meta.document_ids.len() != lines.len() {
        return Err(invalid("documentIds length differs from document count".into()));
    }
    let documents = lines
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let id = meta.document_ids.get(i).cloned().unwrap_or_else(|| format!("{}-{}", meta.id, i + 1));
            Document::new(id, *line)
        })
        .collect();
    let mut corpus = Corpus::new(meta.id, meta.source, meta.language, documents)?;
    corpus.pipeline_version = meta.pipeline_version;
    Ok(corpus)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectRecord {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub error: String,
}

#[derive(Debug, Default)]
pub struct IngestOutcome {
    pub corpora: Vec<Corpus>,
    pub rejects: Vec<RejectRecord>,
    pub warnings: Vec<CleanWarning>,
    pub skipped: Vec<SkippedFile>,
    /// Raw files seen with the source's extension.
    pub inputs: usize,
}

impl IngestOutcome {
    pub fn accepted(&self) -> usize {
        self.corpora.iter().map(Corpus::len).sum()
    }
}

/// Reads raw exports from `dir`, one document per file.
///
/// Files directly in `dir` belong to `language`; each subdirectory is its
/// own language group named after the directory. Accepted documents are cut
/// into corpora of `group_size` documents (the last one may be smaller),
/// named `<language>-<source>-<n>`.
pub fn ingest_directory(
    dir: &Path,
    source: Source,
    language: &str,
    group_size: usize,
) -> Result<IngestOutcome, PreprocessError> {
    let group_size = group_size.max(1);
    let mut outcome = IngestOutcome::default();
    let mut groups: Vec<(String, Vec<PathBuf>)> = vec![(language.to_string(), Vec::new())];
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            groups.push((name, raw_files(&path, source)?));
        } else if has_extension(&path, source) {
            groups[0].1.push(path);
        }
    }

    for (lang, files) in groups {
        let mut docs = Vec::new();
        for path in files {
            outcome.inputs += 1;
            let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let payload = match fs::read(&path).map_err(|e| e.to_string()).and_then(|b| {
                String::from_utf8(b).map_err(|e| format!("not valid UTF-8: {e}"))
            }) {
                Ok(p) => p,
                Err(error) => {
                    outcome.skipped.push(SkippedFile { path, error });
                    continue;
                }
            };
            if source == Source::GitHub {
                if let Err(reason) = filter_readme(&payload) {
                    outcome.rejects.push(RejectRecord { id, reason: reason.as_str().into() });
                    continue;
                }
            }
            let raw = match RawDocument::new(id.clone(), source, payload) {
                Ok(raw) => raw,
                Err(_) => {
                    outcome.rejects.push(RejectRecord { id, reason: "empty".into() });
                    continue;
                }
            };
            let cleaned = clean(&raw);
            outcome.warnings.extend(cleaned.warnings);
            if cleaned.document.text.is_empty() {
                outcome.rejects.push(RejectRecord { id, reason: "empty_after_cleaning".into() });
                continue;
            }
            docs.push(cleaned.document);
        }
        for (n, chunk) in docs.chunks(group_size).enumerate() {
            let id = format!("{lang}-{source}-{}", n + 1);
            outcome.corpora.push(Corpus {
                id,
                source,
                language: lang.clone(),
                documents: chunk.to_vec(),
                pipeline_version: PIPELINE_VERSION,
            });
        }
    }
    Ok(outcome)
}

fn raw_files(dir: &Path, source: Source) -> Result<Vec<PathBuf>, PreprocessError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|p| p.is_file() && has_extension(p, source))
        .collect();
    files.sort();
    Ok(files)
}

fn has_extension(path: &Path, source: Source) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(source.raw_extension()))
}
