//! Cleaning of Stack Overflow threads and GitHub READMEs into plain-text
//! documents, tokenisation, and stopword filtering.

mod clean;
mod io;
mod stoplist;

use serde::{Deserialize, Serialize};
use std::fmt;

pub use clean::{clean, clean_github_readme, clean_stackoverflow, filter_readme, Cleaned, CleanWarning, Rejection, WarningKind};
pub use io::{
    ingest_directory, read_corpus, write_corpus, CorpusMeta, IngestOutcome, RejectRecord, SkippedFile,
};
pub use stoplist::Stoplist;

/// Bumped whenever a cleaning rule changes output.
pub const PIPELINE_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("document {0} has an empty payload")]
    EmptyPayload(String),
    #[error("document {id} is from {actual}, expected {expected}")]
    WrongSource { id: String, expected: Source, actual: Source },
    #[error("corpus {0} has no documents")]
    EmptyCorpus(String),
    #[error("invalid corpus file {path}: {reason}")]
    InvalidCorpusFile { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    StackOverflow,
    GitHub,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::StackOverflow => "stackoverflow",
            Source::GitHub => "github",
        }
    }

    /// File extension of raw exports for this source.
    pub fn raw_extension(self) -> &'static str {
        match self {
            Source::StackOverflow => "html",
            Source::GitHub => "md",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "stackoverflow" | "so" => Ok(Source::StackOverflow),
            "github" | "gh" => Ok(Source::GitHub),
            other => Err(format!("unknown source `{other}` (expected stackoverflow or github)")),
        }
    }
}

/// A raw thread export or README, before cleaning.
#[derive(Debug, Clone)]
pub struct RawDocument {
    id: String,
    source: Source,
    payload: String,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, source: Source, payload: impl Into<String>) -> Result<Self, PreprocessError> {
        let id = id.into();
        let payload = payload.into();
        if payload.is_empty() {
            return Err(PreprocessError::EmptyPayload(id));
        }
        Ok(Self { id, source, payload })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn payload(&self) -> &str {
        &self.payload
    }
}

/// A cleaned document: a single line of text with single-space separators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self { id: id.into(), text: text.into() }
    }

    pub fn tokens(&self) -> Vec<String> {
        tokenize(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub id: String,
    pub source: Source,
    pub language: String,
    pub documents: Vec<Document>,
    pub pipeline_version: u32,
}

impl Corpus {
    pub fn new(
        id: impl Into<String>,
        source: Source,
        language: impl Into<String>,
        documents: Vec<Document>,
    ) -> Result<Self, PreprocessError> {
        let id = id.into();
        if documents.is_empty() {
            return Err(PreprocessError::EmptyCorpus(id));
        }
        Ok(Self { id, source, language: language.into(), documents, pipeline_version: PIPELINE_VERSION })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Tokenised documents, in corpus order.
    pub fn tokenized(&self) -> Vec<Vec<String>> {
        self.documents.iter().map(Document::tokens).collect()
    }
}

/// Maximal non-whitespace runs, lowercased.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

pub fn remove_stopwords(tokens: &[String], stoplist: &Stoplist) -> Vec<String> {
    tokens.iter().filter(|t| !stoplist.contains(t)).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Hello world"), vec!["hello", "world"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("a  b"), vec!["a", "b"]);
    }

    #[test]
    fn stopword_examples() {
        let sl = Stoplist::from_words(["the"]);
        assert_eq!(remove_stopwords(&tokenize("the cat"), &sl), vec!["cat"]);
        let empty = Stoplist::from_words(Vec::<String>::new());
        let toks = tokenize("a a b");
        assert_eq!(remove_stopwords(&toks, &empty), toks);
    }

    #[test]
    fn stopword_filter_matches_brute_force() {
        let mut rng = crate::seed::rng(42);
        let vocab: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
        let mut shuffled = vocab.clone();
        shuffled.shuffle(&mut rng);
        let stop: Vec<String> = shuffled[..20].to_vec();
        let tokens: Vec<String> = (0..1000).map(|_| vocab[rng.random_range(0..vocab.len())].clone()).collect();
        let sl = Stoplist::from_words(stop.clone());
        let mut expected = Vec::new();
        for t in &tokens {
            if !stop.iter().any(|s| s == t) {
                expected.push(t.clone());
            }
        }
        assert_eq!(remove_stopwords(&tokens, &sl), expected);
    }

    #[test]
    fn raw_document_rejects_empty_payload() {
        assert!(matches!(RawDocument::new("x", Source::GitHub, ""), Err(PreprocessError::EmptyPayload(_))));
    }

    #[test]
    fn corpus_needs_documents() {
        assert!(Corpus::new("c", Source::GitHub, "C", vec![]).is_err());
    }

    proptest! {
        #[test]
        fn tokenize_inverts_single_space_join(tokens in prop::collection::vec("[a-z0-9]{1,8}", 0..20)) {
            let joined = tokens.join(" ");
            prop_assert_eq!(tokenize(&joined), tokens);
        }
    }
}
