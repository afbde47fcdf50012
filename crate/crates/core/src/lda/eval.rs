use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, LdaConfig, LdaError, TopicParams, TrainedModel};
use crate::seed::{self, stream};
use crate::stats::median;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalResult {
    pub perplexity: f64,
    pub held_out_tokens: usize,
    /// Natural-log likelihood of the scored held-out tokens.
    pub log_likelihood: f64,
    /// Held-out tokens missing from the training vocabulary.
    pub dropped_tokens: usize,
}

/// Fold-in perplexity: each held-out document's topic mixture is sampled
/// against the frozen topic-word counts, then every token is scored under
/// the resulting mixture.
pub fn heldout_perplexity<S: AsRef<str>>(
    model: &TrainedModel,
    held_out: &[Vec<S>],
    fold_in_sweeps: usize,
    seed: u64,
) -> Result<EvalResult, LdaError> {
    let (docs, dropped) = model.vocab.encode(held_out);
    let scored: usize = docs.iter().map(Vec::len).sum();
    if scored == 0 {
        return Err(LdaError::EmptyHeldout);
    }
    let k = model.config.k;
    let alpha = model.config.alpha;
    let phi = model.phi_table();
    let mut rng = seed::rng(seed);
    let mut counts = vec![0u32; k];
    let mut cumulative = vec![0.0; k];
    let mut theta = vec![0.0; k];
    let mut log_likelihood = 0.0;

    for words in docs.iter().filter(|d| !d.is_empty()) {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut z: Vec<usize> = words
            .iter()
            .map(|_| {
                let t = rng.random_range(0..k);
                counts[t] += 1;
                t
            })
            .collect();
        for _ in 0..fold_in_sweeps {
            for (i, &w) in words.iter().enumerate() {
                let old = z[i];
                counts[old] -= 1;
                let row = &phi[w as usize * k..(w as usize + 1) * k];
                let mut acc = 0.0;
                for t in 0..k {
                    acc += (f64::from(counts[t]) + alpha) * row[t];
                    cumulative[t] = acc;
                }
                let u = rng.random::<f64>() * acc;
                let new = cumulative.partition_point(|&c| c <= u).min(k - 1);
                counts[new] += 1;
                z[i] = new;
            }
        }
        let denom = words.len() as f64 + k as f64 * alpha;
        for t in 0..k {
            theta[t] = (f64::from(counts[t]) + alpha) / denom;
        }
        for &w in words {
            let row = &phi[w as usize * k..(w as usize + 1) * k];
            let p: f64 = theta.iter().zip(row).map(|(a, b)| a * b).sum();
            log_likelihood += p.ln();
        }
    }
    Ok(EvalResult {
        perplexity: (-log_likelihood / scored as f64).exp(),
        held_out_tokens: scored,
        log_likelihood,
        dropped_tokens: dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalSettings {
    pub iterations: usize,
    pub heldout_fraction: f64,
    pub fold_in_sweeps: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self { iterations: LdaConfig::DEFAULT_ITERATIONS, heldout_fraction: 0.1, fold_in_sweeps: 50 }
    }
}

/// Deterministic shuffle split; the held-out side gets `round(fraction * n)`
/// documents, clamped so both sides are non-empty.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), LdaError> {
    if n < 2 {
        return Err(LdaError::TooFewDocuments(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    let held = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let test = idx.split_off(n - held);
    Ok((idx, test))
}

fn pick<S: Clone>(docs: &[Vec<S>], idx: &[usize]) -> Vec<Vec<S>> {
    idx.iter().map(|&i| docs[i].clone()).collect()
}

/// One train + score cycle on a fresh split.
pub fn run_once<S: AsRef<str> + Clone + Sync>(
    docs: &[Vec<S>],
    params: TopicParams,
    settings: &EvalSettings,
    split_seed: u64,
    run_seed: u64,
) -> Result<EvalResult, LdaError> {
    let (train_idx, test_idx) = split_indices(docs.len(), settings.heldout_fraction, split_seed)?;
    score_split(&pick(docs, &train_idx), &pick(docs, &test_idx), params, settings, run_seed)
}

fn score_split<S: AsRef<str>>(
    train_docs: &[Vec<S>],
    test_docs: &[Vec<S>],
    params: TopicParams,
    settings: &EvalSettings,
    run_seed: u64,
) -> Result<EvalResult, LdaError> {
    let config = LdaConfig::new(params, settings.iterations, seed::derive(run_seed, &[stream::RUN]));
    let model = train(train_docs, &config)?;
    let result = heldout_perplexity(&model, test_docs, settings.fold_in_sweeps, seed::derive(run_seed, &[stream::FOLD_IN]))?;
    if result.perplexity.is_finite() {
        Ok(result)
    } else {
        Err(LdaError::InvalidModel(format!("non-finite perplexity {}", result.perplexity)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RunOutcome {
    Ok(EvalResult),
    Crashed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfigEvaluation {
    pub params: TopicParams,
    /// Median perplexity over the successful runs.
    pub median: f64,
    pub runs: Vec<RunOutcome>,
}

impl ConfigEvaluation {
    pub fn crashed(&self) -> usize {
        self.runs.iter().filter(|r| matches!(r, RunOutcome::Crashed(_))).count()
    }

    pub fn perplexities(&self) -> Vec<f64> {
        self.runs
            .iter()
            .filter_map(|r| match r {
                RunOutcome::Ok(e) => Some(e.perplexity),
                RunOutcome::Crashed(_) => None,
            })
            .collect()
    }
}

/// Median held-out perplexity over `runs` independently seeded runs on one
/// split drawn from `master_seed`.
pub fn evaluate_config<S: AsRef<str> + Clone + Sync>(
    docs: &[Vec<S>],
    params: TopicParams,
    runs: usize,
    settings: &EvalSettings,
    master_seed: u64,
) -> Result<ConfigEvaluation, LdaError> {
    params.validate()?;
    if runs == 0 {
        return Err(LdaError::InvalidConfig("at least one run is required".into()));
    }
    let (train_idx, test_idx) =
        split_indices(docs.len(), settings.heldout_fraction, seed::derive(master_seed, &[stream::SPLIT]))?;
    let (train_docs, test_docs) = (pick(docs, &train_idx), pick(docs, &test_idx));
    let outcomes: Vec<RunOutcome> = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            match score_split(&train_docs, &test_docs, params, settings, seed::derive(master_seed, &[stream::RUN, r])) {
                Ok(e) => RunOutcome::Ok(e),
                Err(e) => RunOutcome::Crashed(e.to_string()),
            }
        })
        .collect();
    let mut eval = ConfigEvaluation { params, median: f64::NAN, runs: outcomes };
    eval.median = median(&eval.perplexities()).ok_or(LdaError::AllRunsFailed(runs))?;
    Ok(eval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lda::{build_vocab, Vocabulary};
    use crate::synthetic::PlantedCorpus;

    #[test]
    fn uniform_model_has_vocabulary_size_perplexity() {
        let words: Vec<String> = (0..50).map(|i| format!("w{i}")).collect();
        let vocab = Vocabulary::from(words.clone());
        let counts = vec![vec![3u32; 50]; 4];
        let cfg = LdaConfig::new(TopicParams::new(4, 0.7, 0.01), 0, 0);
        let model = TrainedModel::from_topic_word_counts(cfg, vocab, &counts).unwrap();
        let mut rng = seed::rng(5);
        let held: Vec<Vec<String>> =
            (0..20).map(|_| (0..30).map(|_| words[rng.random_range(0..50)].clone()).collect()).collect();
        let r = heldout_perplexity(&model, &held, 10, 1).unwrap();
        assert!((r.perplexity - 50.0).abs() / 50.0 < 1e-9, "{}", r.perplexity);
        assert_eq!(r.held_out_tokens, 600);
    }

    #[test]
    fn single_word_vocabulary_has_unit_perplexity() {
        let docs = vec![vec!["x"; 5], vec!["x"; 3]];
        let model = train(&docs, &LdaConfig::new(TopicParams::new(3, 0.5, 0.1), 5, 2)).unwrap();
        let r = heldout_perplexity(&model, &[vec!["x"; 4]], 5, 3).unwrap();
        assert!((r.perplexity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_vocabulary_tokens_are_dropped() {
        let model = train(&[vec!["a", "b"]], &LdaConfig::new(TopicParams::new(2, 0.5, 0.1), 2, 2)).unwrap();
        let r = heldout_perplexity(&model, &[vec!["a", "zzz", "b", "yyy"]], 2, 0).unwrap();
        assert_eq!((r.held_out_tokens, r.dropped_tokens), (2, 2));
        assert_eq!(heldout_perplexity(&model, &[vec!["zzz"]], 2, 0).unwrap_err(), LdaError::EmptyHeldout);
    }

    #[test]
    fn perplexity_is_at_least_one_and_matches_log_likelihood() {
        let pc = PlantedCorpus::generate(4, 10, 30, 20, 0.2, 11);
        let model = train(&pc.documents, &LdaConfig::new(TopicParams::new(4, 0.1, 0.01), 20, 3)).unwrap();
        let r = heldout_perplexity(&model, &pc.documents[..5], 10, 4).unwrap();
        assert!(r.perplexity >= 1.0);
        assert!((r.perplexity - (-r.log_likelihood / r.held_out_tokens as f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn split_is_deterministic_and_covers_all() {
        let (a, b) = split_indices(20, 0.1, 9).unwrap();
        assert_eq!((a.len(), b.len()), (18, 2));
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
        assert_eq!(split_indices(20, 0.1, 9).unwrap(), (a, b));
        assert_eq!(split_indices(3, 0.0, 1).unwrap().1.len(), 1);
        assert!(split_indices(1, 0.5, 1).is_err());
    }

    #[test]
    fn evaluate_config_median_and_determinism() {
        let pc = PlantedCorpus::generate(3, 8, 20, 15, 0.3, 2);
        let settings = EvalSettings { iterations: 10, heldout_fraction: 0.2, fold_in_sweeps: 5 };
        let p = TopicParams::new(3, 0.5, 0.05);
        let one = evaluate_config(&pc.documents, p, 1, &settings, 42).unwrap();
        assert_eq!(one.median, one.perplexities()[0]);
        let three = evaluate_config(&pc.documents, p, 3, &settings, 42).unwrap();
        let mut v = three.perplexities();
        v.sort_by(f64::total_cmp);
        assert_eq!(three.median, v[1]);
        let again = evaluate_config(&pc.documents, p, 3, &settings, 42).unwrap();
        assert_eq!(three.median.to_bits(), again.median.to_bits());
        assert_eq!(three.perplexities()[0], one.perplexities()[0]);
    }

    #[test]
    fn vocab_round_trip_through_encode() {
        let (v, enc) = build_vocab(&[vec!["p", "q"], vec!["q"]]).unwrap();
        assert_eq!(v.encode(&[vec!["q", "p", "r"]]), (vec![vec![1, 0]], 1));
        assert_eq!(enc.len(), 2);
    }
}
