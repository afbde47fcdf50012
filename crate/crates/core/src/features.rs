//! The 24 corpus features: characters, words, unique words and entropy, each
//! at corpus scope and aggregated over documents by median and standard
//! deviation, with and without stopwords.

use std::collections::HashMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::preprocess::{remove_stopwords, tokenize, Corpus, Document, Source, Stoplist};
use crate::stats::{median, sample_stdev};

pub const FEATURE_COUNT: usize = 24;

/// Canonical feature order: per measure, the with-stopword variants at
/// corpus, median and stdev scope, then the same without stopwords.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "corpusCharacters",
    "medianDocumentCharacters",
    "stdevDocumentCharacters",
    "corpusCharactersNoStopwords",
    "medianDocumentCharactersNoStopwords",
    "stdevDocumentCharactersNoStopwords",
    "corpusWords",
    "medianDocumentWords",
    "stdevDocumentWords",
    "corpusWordsNoStopwords",
    "medianDocumentWordsNoStopwords",
    "stdevDocumentWordsNoStopwords",
    "corpusUniqueWords",
    "medianDocumentUniqueWords",
    "stdevDocumentUniqueWords",
    "corpusUniqueWordsNoStopwords",
    "medianDocumentUniqueWordsNoStopwords",
    "stdevDocumentUniqueWordsNoStopwords",
    "corpusEntropy",
    "medianDocumentEntropy",
    "stdevDocumentEntropy",
    "corpusEntropyNoStopwords",
    "medianDocumentEntropyNoStopwords",
    "stdevDocumentEntropyNoStopwords",
];

pub const ID_COLUMNS: [&str; 3] = ["corpusId", "source", "language"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Characters,
    Words,
    UniqueWords,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Corpus,
    MedianDocument,
    StdevDocument,
}

/// Index into `FEATURE_NAMES`.
pub fn feature_index(measure: Measure, scope: Scope, stopwords_removed: bool) -> usize {
    let m = match measure {
        Measure::Characters => 0,
        Measure::Words => 1,
        Measure::UniqueWords => 2,
        Measure::Entropy => 3,
    };
    let s = match scope {
        Scope::Corpus => 0,
        Scope::MedianDocument => 1,
        Scope::StdevDocument => 2,
    };
    m * 6 + usize::from(stopwords_removed) * 3 + s
}

pub fn feature_position(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("corpus {0} has no documents")]
    EmptyCorpus(String),
    #[error("feature table line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Shannon entropy in bits of the empirical token distribution.
pub fn shannon_entropy<S: AsRef<str>>(tokens: &[S]) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in tokens {
        *counts.entry(t.as_ref()).or_default() += 1;
    }
    entropy_of_counts(counts.into_values().collect(), tokens.len())
}

/// Counts are summed in sorted order so the result never depends on hash order.
fn entropy_of_counts(mut counts: Vec<usize>, total: usize) -> f64 {
    counts.sort_unstable();
    let n = total as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TextMetrics {
    pub characters: usize,
    pub words: usize,
    pub unique_words: usize,
    pub entropy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DocumentMetrics {
    pub with_stopwords: TextMetrics,
    pub no_stopwords: TextMetrics,
}

fn token_metrics(tokens: &[String], characters: usize) -> TextMetrics {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let unique_words = counts.len();
    TextMetrics {
        characters,
        words: tokens.len(),
        unique_words,
        entropy: if tokens.is_empty() { 0.0 } else { entropy_of_counts(counts.into_values().collect(), tokens.len()) },
    }
}

/// Characters of the tokens re-joined with single spaces.
fn joined_len(tokens: &[String]) -> usize {
    let chars: usize = tokens.iter().map(|t| t.chars().count()).sum();
    chars + tokens.len().saturating_sub(1)
}

pub fn document_metrics(doc: &Document, stoplist: &Stoplist) -> DocumentMetrics {
    let tokens = tokenize(&doc.text);
    let filtered = remove_stopwords(&tokens, stoplist);
    DocumentMetrics {
        with_stopwords: token_metrics(&tokens, doc.text.chars().count()),
        no_stopwords: token_metrics(&filtered, joined_len(&filtered)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_position(name).map(|i| self.0[i])
    }

    pub fn value(&self, measure: Measure, scope: Scope, stopwords_removed: bool) -> f64 {
        self.0[feature_index(measure, scope, stopwords_removed)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        FEATURE_NAMES.iter().copied().zip(self.0.iter().copied())
    }
}

pub fn corpus_features(corpus: &Corpus, stoplist: &Stoplist) -> Result<FeatureVector, FeatureError> {
    if corpus.documents.is_empty() {
        return Err(FeatureError::EmptyCorpus(corpus.id.clone()));
    }
    let per_doc: Vec<(DocumentMetrics, Vec<String>, Vec<String>)> = corpus
        .documents
        .par_iter()
        .map(|d| {
            let tokens = tokenize(&d.text);
            let filtered = remove_stopwords(&tokens, stoplist);
            (document_metrics(d, stoplist), tokens, filtered)
        })
        .collect();

    let mut out = [0.0; FEATURE_COUNT];
    for removed in [false, true] {
        let pick = |m: &DocumentMetrics| if removed { m.no_stopwords } else { m.with_stopwords };
        let stream: Vec<String> =
            per_doc.iter().flat_map(|(_, t, f)| if removed { f.clone() } else { t.clone() }).collect();
        let corpus_chars: usize = per_doc.iter().map(|(m, _, _)| pick(m).characters).sum();
        let corpus_scope = token_metrics(&stream, corpus_chars);

        let columns: [(Measure, f64, Vec<f64>); 4] = [
            (
                Measure::Characters,
                corpus_scope.characters as f64,
                per_doc.iter().map(|(m, _, _)| pick(m).characters as f64).collect(),
            ),
            (Measure::Words, corpus_scope.words as f64, per_doc.iter().map(|(m, _, _)| pick(m).words as f64).collect()),
            (
                Measure::UniqueWords,
                corpus_scope.unique_words as f64,
                per_doc.iter().map(|(m, _, _)| pick(m).unique_words as f64).collect(),
            ),
            (Measure::Entropy, corpus_scope.entropy, per_doc.iter().map(|(m, _, _)| pick(m).entropy).collect()),
        ];
        for (measure, corpus_value, doc_values) in columns {
            out[feature_index(measure, Scope::Corpus, removed)] = corpus_value;
            out[feature_index(measure, Scope::MedianDocument, removed)] = median(&doc_values).unwrap_or(0.0);
            out[feature_index(measure, Scope::StdevDocument, removed)] = sample_stdev(&doc_values);
        }
    }
    Ok(FeatureVector(out))
}

/// One row of the feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub corpus_id: String,
    pub source: Source,
    pub language: String,
    pub features: FeatureVector,
}

impl FeatureRow {
    pub fn from_corpus(corpus: &Corpus, stoplist: &Stoplist) -> Result<Self, FeatureError> {
        Ok(Self {
            corpus_id: corpus.id.clone(),
            source: corpus.source,
            language: corpus.language.clone(),
            features: corpus_features(corpus, stoplist)?,
        })
    }
}

/// Fixed-point decimal with at least six significant digits.
pub fn format_value(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.6}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(6) as usize;
    format!("{v:.decimals$}")
}

pub fn write_feature_csv<W: Write>(writer: W, rows: &[FeatureRow]) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ID_COLUMNS.iter().chain(FEATURE_NAMES.iter()))?;
    for row in rows {
        let mut record = vec![row.corpus_id.clone(), row.source.to_string(), row.language.clone()];
        record.extend(row.features.0.iter().map(|&v| format_value(v)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a feature table. Columns may appear in any order; all 24 feature
/// columns and `corpusId` are required.
pub fn read_feature_csv<R: Read>(reader: R) -> Result<Vec<FeatureRow>, FeatureError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = col("corpusId").ok_or(FeatureError::Malformed { line: 1, reason: "missing corpusId column".into() })?;
    let source_col = col("source");
    let language_col = col("language");
    let mut feature_cols = [0usize; FEATURE_COUNT];
    for (i, name) in FEATURE_NAMES.iter().enumerate() {
        feature_cols[i] =
            col(name).ok_or_else(|| FeatureError::Malformed { line: 1, reason: format!("missing column {name}") })?;
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |c: usize| record.get(c).unwrap_or("").trim();
        let source = match source_col.map(field) {
            Some(s) if !s.is_empty() => {
                s.parse().map_err(|reason| FeatureError::Malformed { line, reason })?
            }
            _ => Source::GitHub,
        };
        let mut values = [0.0; FEATURE_COUNT];
        for (i, &c) in feature_cols.iter().enumerate() {
            let raw = field(c);
            values[i] = raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| FeatureError::Malformed {
                line,
                reason: format!("{}: `{raw}` is not a finite number", FEATURE_NAMES[i]),
            })?;
        }
        rows.push(FeatureRow {
            corpus_id: field(id_col).to_string(),
            source,
            language: language_col.map(field).unwrap_or("").to_string(),
            features: FeatureVector(values),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(texts: &[&str]) -> Corpus {
        let docs = texts.iter().enumerate().map(|(i, t)| Document::new(format!("d{i}"), *t)).collect();
        Corpus::new("c", Source::GitHub, "C", docs).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(shannon_entropy(&["a", "a", "a"]), 0.0);
        assert!((shannon_entropy(&["a", "b", "c", "d"]) - 2.0).abs() < 1e-15);
        let h = -(2.0f64 / 3.0) * (2.0f64 / 3.0).log2() - (1.0f64 / 3.0) * (1.0f64 / 3.0).log2();
        assert!((shannon_entropy(&["a", "a", "b"]) - h).abs() < 1e-15);
        assert!((h - 0.918296).abs() < 1e-6);
        assert_eq!(shannon_entropy::<&str>(&[]), 0.0);
    }

    #[test]
    fn document_metric_examples() {
        let none = Stoplist::empty();
        let m = document_metrics(&Document::new("x", "a a b"), &none);
        assert_eq!((m.with_stopwords.words, m.with_stopwords.unique_words, m.with_stopwords.characters), (3, 2, 5));
        assert!((m.with_stopwords.entropy - 0.918296).abs() < 1e-6);

        assert_eq!(document_metrics(&Document::new("e", ""), &none), DocumentMetrics::default());

        let the = Stoplist::from_words(["the"]);
        let m = document_metrics(&Document::new("t", "the the"), &the);
        assert_eq!(m.no_stopwords, TextMetrics::default());
        assert_eq!((m.with_stopwords.words, m.with_stopwords.unique_words, m.with_stopwords.entropy), (2, 1, 0.0));
    }

    #[test]
    fn no_stopword_characters_rejoin_tokens() {
        let m = document_metrics(&Document::new("x", "the Cat sat"), &Stoplist::from_words(["the"]));
        assert_eq!(m.no_stopwords.characters, "cat sat".len());
    }

    #[test]
    fn corpus_examples() {
        let none = Stoplist::empty();
        let fv = corpus_features(&corpus(&["a a b", "a b c d e"]), &none).unwrap();
        assert_eq!(fv.get("medianDocumentWords"), Some(4.0));
        assert!((fv.get("stdevDocumentWords").unwrap() - 1.414214).abs() < 1e-6);

        let fv = corpus_features(&corpus(&["a a", "a b", "b b b"]), &none).unwrap();
        assert_eq!(fv.get("corpusWords"), Some(7.0));
        assert_eq!(fv.get("corpusUniqueWords"), Some(2.0));
        assert!((fv.get("corpusEntropy").unwrap() - 0.985228).abs() < 1e-6);
    }

    #[test]
    fn single_document_corpus() {
        let stop = Stoplist::from_words(["the"]);
        let c = corpus(&["the quick fox the end"]);
        let fv = corpus_features(&c, &stop).unwrap();
        let dm = document_metrics(&c.documents[0], &stop);
        for removed in [false, true] {
            let m = if removed { dm.no_stopwords } else { dm.with_stopwords };
            assert_eq!(fv.value(Measure::Characters, Scope::Corpus, removed), m.characters as f64);
            assert_eq!(fv.value(Measure::Words, Scope::Corpus, removed), m.words as f64);
            assert_eq!(fv.value(Measure::UniqueWords, Scope::MedianDocument, removed), m.unique_words as f64);
            assert_eq!(fv.value(Measure::Entropy, Scope::Corpus, removed), m.entropy);
            for measure in [Measure::Characters, Measure::Words, Measure::UniqueWords, Measure::Entropy] {
                assert_eq!(fv.value(measure, Scope::StdevDocument, removed), 0.0);
            }
        }
    }

    #[test]
    fn names_and_indices_agree() {
        assert_eq!(FEATURE_NAMES[feature_index(Measure::Entropy, Scope::StdevDocument, true)], "stdevDocumentEntropyNoStopwords");
        assert_eq!(FEATURE_NAMES[feature_index(Measure::UniqueWords, Scope::Corpus, false)], "corpusUniqueWords");
        let mut seen: Vec<_> = FEATURE_NAMES.to_vec();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), FEATURE_COUNT);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let c = corpus(&["alpha beta", "beta gamma delta"]);
        let row = FeatureRow::from_corpus(&c, &Stoplist::empty()).unwrap();
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, std::slice::from_ref(&row)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap().split(',').count(), 27);
        let back = read_feature_csv(buf.as_slice()).unwrap();
        assert_eq!(back[0].corpus_id, "c");
        for (a, b) in back[0].features.0.iter().zip(row.features.0.iter()) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
        }
        let bad = text.replace("c,github", "c,github").replacen(",2.", ",x", 1);
        match read_feature_csv(bad.as_bytes()) {
            Err(FeatureError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed, got {other:?}"),
        }
    }

    #[test]
    fn format_keeps_six_significant_digits() {
        assert_eq!(format_value(0.0), "0.000000");
        assert_eq!(format_value(0.00123456789), "0.00123457");
        assert_eq!(format_value(12.5), "12.500000");
        assert_eq!(format_value(1234567.0), "1234567.000000");
    }
}
