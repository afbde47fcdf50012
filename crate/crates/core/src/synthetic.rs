//! Synthetic corpora with known structure, for tests, benches and demos.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::features::{feature_position, FeatureRow, FeatureVector, FEATURE_COUNT};
use crate::lda::TrainedModel;
use crate::portfolio::PerformanceMatrix;
use crate::preprocess::Source;
use crate::seed;

/// Documents drawn from `topics` planted topics with disjoint vocabularies,
/// each topic uniform over its `words_per_topic` words.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub topics: usize,
    pub words_per_topic: usize,
    pub documents: Vec<Vec<String>>,
}

impl PlantedCorpus {
    /// Document mixtures are symmetric Dirichlet(`doc_alpha`) draws.
    pub fn generate(topics: usize, words_per_topic: usize, docs: usize, doc_len: usize, doc_alpha: f64, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let gamma = Gamma::new(doc_alpha, 1.0).expect("positive concentration");
        let documents = (0..docs)
            .map(|_| {
                let mut theta: Vec<f64> = (0..topics).map(|_| gamma.sample(&mut rng)).collect();
                let total: f64 = theta.iter().sum();
                if total > 0.0 {
                    theta.iter_mut().for_each(|x| *x /= total);
                } else {
                    theta = vec![0.0; topics];
                    theta[rng.random_range(0..topics)] = 1.0;
                }
                (0..doc_len)
                    .map(|_| {
                        let u: f64 = rng.random();
                        let mut acc = 0.0;
                        let mut topic = topics - 1;
                        for (t, p) in theta.iter().enumerate() {
                            acc += p;
                            if u < acc {
                                topic = t;
                                break;
                            }
                        }
                        Self::word(topic, rng.random_range(0..words_per_topic))
                    })
                    .collect()
            })
            .collect();
        Self { topics, words_per_topic, documents }
    }

    /// The reference setting: 4 topics x 25 words, 200 documents of 50 tokens.
    pub fn standard(seed: u64) -> Self {
        Self::generate(4, 25, 200, 50, 0.1, seed)
    }

    pub fn word(topic: usize, index: usize) -> String {
        format!("t{topic}w{index}")
    }

    pub fn planted_topic(word: &str) -> Option<usize> {
        word.strip_prefix('t')?.split('w').next()?.parse().ok()
    }

    /// For every inferred topic with mass, the largest share of that mass
    /// falling on a single planted vocabulary.
    pub fn topic_purity(&self, model: &TrainedModel) -> Vec<f64> {
        let vocab = model.vocab();
        (0..model.num_topics())
            .filter(|&t| model.topic_total(t) > 0)
            .map(|t| {
                let mut mass = vec![0u64; self.topics];
                for (w, word) in vocab.words().iter().enumerate() {
                    if let Some(p) = Self::planted_topic(word) {
                        mass[p] += u64::from(model.topic_word_count(t, w));
                    }
                }
                *mass.iter().max().unwrap() as f64 / model.topic_total(t) as f64
            })
            .collect()
    }
}

/// Configuration ids of [`threshold_portfolio`], in matrix order.
pub const THRESHOLD_CONFIGS: [&str; 5] = ["a.large", "b.small", "c.middle", "d.weak", "default"];

/// Corpus word count at which the best configuration switches.
pub const THRESHOLD_WORDS: f64 = 1000.0;

/// A portfolio whose best configuration depends on one feature:
/// `a.large` wins when `corpusWords > 1000`, `b.small` otherwise, and the
/// remaining configurations are never best. Word counts are spread evenly
/// over [200, 1800]. Every other feature takes one random value shared by
/// all corpora, so the corpora differ only in size.
pub fn threshold_portfolio(corpora: usize, seed: u64) -> (Vec<FeatureRow>, PerformanceMatrix) {
    threshold_portfolio_impl(corpora, false, seed)
}

/// Like [`threshold_portfolio`] but every other feature is drawn
/// independently per corpus.
pub fn noisy_threshold_portfolio(corpora: usize, seed: u64) -> (Vec<FeatureRow>, PerformanceMatrix) {
    threshold_portfolio_impl(corpora, true, seed)
}

fn threshold_portfolio_impl(corpora: usize, independent: bool, seed: u64) -> (Vec<FeatureRow>, PerformanceMatrix) {
    let mut rng = seed::rng(seed);
    let words_at = feature_position("corpusWords").expect("known feature");
    let shared: [f64; FEATURE_COUNT] = std::array::from_fn(|_| rng.random_range(0.0..2000.0));
    let mut rows = Vec::with_capacity(corpora);
    let mut cells = vec![Vec::with_capacity(corpora); THRESHOLD_CONFIGS.len()];
    for j in 0..corpora {
        let words = (200.0 + 1600.0 * (j as f64 + 0.5) / corpora as f64).round();
        let mut f = shared;
        if independent {
            f.iter_mut().for_each(|v| *v = rng.random_range(0.0..2000.0));
        }
        f[words_at] = words;
        let large = words > THRESHOLD_WORDS;
        let base = [if large { 100.0 } else { 113.0 }, if large { 112.0 } else { 100.0 }, 108.0, 125.0, 150.0];
        for (c, b) in base.iter().enumerate() {
            cells[c].push(Some(b + rng.random_range(-1.0..1.0)));
        }
        rows.push(FeatureRow {
            corpus_id: format!("synthetic-{j}"),
            source: Source::GitHub,
            language: "none".into(),
            features: FeatureVector(f),
        });
    }
    let matrix = PerformanceMatrix::from_cells(
        THRESHOLD_CONFIGS.iter().map(|s| s.to_string()).collect(),
        rows.iter().map(|r| r.corpus_id.clone()).collect(),
        cells,
    )
    .expect("finite synthetic cells");
    (rows, matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_vocabulary() {
        let pc = PlantedCorpus::standard(1);
        assert_eq!(pc.documents.len(), 200);
        assert!(pc.documents.iter().all(|d| d.len() == 50));
        assert!(pc.documents.iter().flatten().all(|w| PlantedCorpus::planted_topic(w).unwrap() < 4));
        assert_eq!(PlantedCorpus::planted_topic("t3w24"), Some(3));
    }
}
