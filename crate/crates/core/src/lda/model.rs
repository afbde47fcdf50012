use serde::{Deserialize, Serialize};

use super::{LdaConfig, LdaError, Vocabulary};

pub const MODEL_FORMAT: &str = "ldatune-model";
pub const MODEL_VERSION: u32 = 1;

/// Collapsed Gibbs sampler state: counts and per-token topic assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub(crate) config: LdaConfig,
    pub(crate) vocab: Vocabulary,
    /// Word-major `V x k` counts, `word_topic[w * k + t]`.
    pub(crate) word_topic: Vec<u32>,
    pub(crate) topic_totals: Vec<u64>,
    /// Document-major `D x k` counts.
    pub(crate) doc_topic: Vec<u32>,
    pub(crate) documents: Vec<Vec<u32>>,
    pub(crate) assignments: Vec<Vec<u32>>,
}

impl TrainedModel {
    /// A model defined only by its topic-word counts (`counts[t][w]`), with no
    /// training documents attached.
    pub fn from_topic_word_counts(config: LdaConfig, vocab: Vocabulary, counts: &[Vec<u32>]) -> Result<Self, LdaError> {
        config.validate()?;
        let (k, v) = (config.k, vocab.len());
        if counts.len() != k || counts.iter().any(|row| row.len() != v) {
            return Err(LdaError::InvalidModel(format!("expected a {k} x {v} count matrix")));
        }
        let mut word_topic = vec![0u32; v * k];
        let mut topic_totals = vec![0u64; k];
        for (t, row) in counts.iter().enumerate() {
            for (w, &c) in row.iter().enumerate() {
                word_topic[w * k + t] = c;
                topic_totals[t] += u64::from(c);
            }
        }
        Ok(Self { config, vocab, word_topic, topic_totals, doc_topic: Vec::new(), documents: Vec::new(), assignments: Vec::new() })
    }

    pub fn config(&self) -> &LdaConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn num_topics(&self) -> usize {
        self.config.k
    }

    pub fn num_documents(&self) -> usize {
        self.documents.len()
    }

    pub fn topic_word_count(&self, topic: usize, word: usize) -> u32 {
        self.word_topic[word * self.config.k + topic]
    }

    pub fn topic_total(&self, topic: usize) -> u64 {
        self.topic_totals[topic]
    }

    pub fn doc_topic_count(&self, doc: usize, topic: usize) -> u32 {
        self.doc_topic[doc * self.config.k + topic]
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.assignments
    }

    pub fn total_tokens(&self) -> usize {
        self.documents.iter().map(Vec::len).sum()
    }

    /// Topic-word distribution estimate `(n_tw + beta) / (n_t + V beta)`.
    pub fn phi(&self, topic: usize, word: usize) -> f64 {
        let v = self.vocab.len() as f64;
        (f64::from(self.topic_word_count(topic, word)) + self.config.beta)
            / (self.topic_totals[topic] as f64 + v * self.config.beta)
    }

    /// Word-major `V x k` table of `phi`.
    pub(crate) fn phi_table(&self) -> Vec<f64> {
        let k = self.config.k;
        let vb = self.vocab.len() as f64 * self.config.beta;
        let denom: Vec<f64> = self.topic_totals.iter().map(|&n| 1.0 / (n as f64 + vb)).collect();
        self.word_topic
            .iter()
            .enumerate()
            .map(|(i, &c)| (f64::from(c) + self.config.beta) * denom[i % k])
            .collect()
    }

    /// Verifies every counting identity against the assignments.
    pub fn check_invariants(&self) -> Result<(), LdaError> {
        let (k, v) = (self.config.k, self.vocab.len());
        let bad = |m: String| Err(LdaError::InvalidModel(m));
        if self.word_topic.len() != v * k || self.topic_totals.len() != k {
            return bad("count matrix dimensions".into());
        }
        for t in 0..k {
            let sum: u64 = (0..v).map(|w| u64::from(self.word_topic[w * k + t])).sum();
            if sum != self.topic_totals[t] {
                return bad(format!("topic {t}: word counts sum to {sum}, total is {}", self.topic_totals[t]));
            }
        }
        if self.documents.is_empty() {
            return Ok(());
        }
        if self.assignments.len() != self.documents.len() || self.doc_topic.len() != self.documents.len() * k {
            return bad("document dimensions".into());
        }
        let mut word_topic = vec![0u32; v * k];
        for (d, (words, topics)) in self.documents.iter().zip(&self.assignments).enumerate() {
            if words.len() != topics.len() {
                return bad(format!("document {d}: {} tokens but {} assignments", words.len(), topics.len()));
            }
            let row = &self.doc_topic[d * k..(d + 1) * k];
            let len: u64 = row.iter().map(|&c| u64::from(c)).sum();
            if len != words.len() as u64 {
                return bad(format!("document {d}: topic counts sum to {len}, length is {}", words.len()));
            }
            let mut recount = vec![0u32; k];
            for (&w, &t) in words.iter().zip(topics) {
                recount[t as usize] += 1;
                word_topic[w as usize * k + t as usize] += 1;
            }
            if recount != row {
                return bad(format!("document {d}: topic counts disagree with assignments"));
            }
        }
        if word_topic != self.word_topic {
            return bad("topic-word counts disagree with assignments".into());
        }
        let total: u64 = self.topic_totals.iter().sum();
        if total != self.total_tokens() as u64 {
            return bad("topic totals disagree with token count".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        serde_json::to_string(&ModelFile::from(self))
    }

    pub fn from_json(text: &str) -> Result<Self, ModelReadError> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(ModelReadError::Lda(LdaError::InvalidModel(format!(
                "unsupported model container {} v{}",
                file.format, file.version
            ))));
        }
        let mut model = TrainedModel::from_topic_word_counts(file.config, file.vocab, &file.topic_word_counts)?;
        let k = model.config.k;
        model.doc_topic = Vec::with_capacity(file.documents.len() * k);
        for row in &file.doc_topic_counts {
            if row.len() != k {
                return Err(ModelReadError::Lda(LdaError::InvalidModel("doc-topic row length".into())));
            }
            model.doc_topic.extend_from_slice(row);
        }
        model.documents = file.documents;
        model.assignments = file.assignments;
        model.check_invariants()?;
        Ok(model)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelReadError {
    #[error("invalid model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Lda(#[from] LdaError),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ModelFile {
    format: String,
    version: u32,
    config: LdaConfig,
    vocab: Vocabulary,
    topic_word_counts: Vec<Vec<u32>>,
    doc_topic_counts: Vec<Vec<u32>>,
    documents: Vec<Vec<u32>>,
    assignments: Vec<Vec<u32>>,
}

impl From<&TrainedModel> for ModelFile {
    fn from(m: &TrainedModel) -> Self {
        let (k, v) = (m.config.k, m.vocab.len());
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: m.config,
            vocab: m.vocab.clone(),
            topic_word_counts: (0..k).map(|t| (0..v).map(|w| m.word_topic[w * k + t]).collect()).collect(),
            doc_topic_counts: m.doc_topic.chunks(k).map(<[u32]>::to_vec).collect(),
            documents: m.documents.clone(),
            assignments: m.assignments.clone(),
        }
    }
}
