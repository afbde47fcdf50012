use rand::Rng;

use super::{build_vocab, LdaConfig, LdaError, TrainedModel};
use crate::seed;

/// Trains on tokenised documents.
pub fn train<S: AsRef<str>>(docs: &[Vec<S>], config: &LdaConfig) -> Result<TrainedModel, LdaError> {
    train_with_observer(docs, config, |_, _| {})
}

/// Like [`train`], calling `observer(sweep, model)` after every completed sweep.
pub fn train_with_observer<S, F>(docs: &[Vec<S>], config: &LdaConfig, mut observer: F) -> Result<TrainedModel, LdaError>
where
    S: AsRef<str>,
    F: FnMut(usize, &TrainedModel),
{
    config.validate()?;
    let (vocab, documents) = build_vocab(docs)?;
    let k = config.k;
    let v = vocab.len();
    let mut rng = seed::rng(config.seed);

    let mut model = TrainedModel {
        config: *config,
        vocab,
        word_topic: vec![0; v * k],
        topic_totals: vec![0; k],
        doc_topic: vec![0; documents.len() * k],
        assignments: Vec::with_capacity(documents.len()),
        documents,
    };
    for (d, words) in model.documents.iter().enumerate() {
        let z: Vec<u32> = words
            .iter()
            .map(|&w| {
                let t = rng.random_range(0..k);
                model.word_topic[w as usize * k + t] += 1;
                model.topic_totals[t] += 1;
                model.doc_topic[d * k + t] += 1;
                t as u32
            })
            .collect();
        model.assignments.push(z);
    }

    let mut sampler = Sweeper::new(&model);
    for sweep in 0..config.iterations {
        sampler.sweep(&mut model, &mut rng);
        observer(sweep + 1, &model);
    }
    Ok(model)
}

/// Scratch state for repeated sweeps.
struct Sweeper {
    /// `1 / (n_t + V beta)`, refreshed for the two topics touched per token.
    inv_denom: Vec<f64>,
    cumulative: Vec<f64>,
    vbeta: f64,
}

impl Sweeper {
    fn new(model: &TrainedModel) -> Self {
        let vbeta = model.vocab.len() as f64 * model.config.beta;
        Self {
            inv_denom: model.topic_totals.iter().map(|&n| 1.0 / (n as f64 + vbeta)).collect(),
            cumulative: vec![0.0; model.config.k],
            vbeta,
        }
    }

    fn sweep<R: Rng>(&mut self, m: &mut TrainedModel, rng: &mut R) {
        let k = m.config.k;
        let (alpha, beta) = (m.config.alpha, m.config.beta);
        for d in 0..m.documents.len() {
            let doc_row = d * k;
            for i in 0..m.documents[d].len() {
                let w = m.documents[d][i] as usize;
                let old = m.assignments[d][i] as usize;
                let word_row = w * k;

                m.word_topic[word_row + old] -= 1;
                m.topic_totals[old] -= 1;
                m.doc_topic[doc_row + old] -= 1;
                self.inv_denom[old] = 1.0 / (m.topic_totals[old] as f64 + self.vbeta);

                let doc_counts = &m.doc_topic[doc_row..doc_row + k];
                let word_counts = &m.word_topic[word_row..word_row + k];
                let mut acc = 0.0;
                for t in 0..k {
                    acc += (f64::from(doc_counts[t]) + alpha) * (f64::from(word_counts[t]) + beta) * self.inv_denom[t];
                    self.cumulative[t] = acc;
                }
                let u = rng.random::<f64>() * acc;
                let new = self.cumulative.partition_point(|&c| c <= u).min(k - 1);

                m.word_topic[word_row + new] += 1;
                m.topic_totals[new] += 1;
                m.doc_topic[doc_row + new] += 1;
                self.inv_denom[new] = 1.0 / (m.topic_totals[new] as f64 + self.vbeta);
                m.assignments[d][i] = new as u32;
            }
        }
    }
}

/// Normalised full conditional for token `i` of training document `d`, with
/// that token's own assignment excluded.
#[cfg(test)]
pub(crate) fn conditional(m: &TrainedModel, d: usize, i: usize) -> Vec<f64> {
    let k = m.config.k;
    let w = m.documents[d][i] as usize;
    let z = m.assignments[d][i] as usize;
    let vbeta = m.vocab.len() as f64 * m.config.beta;
    let weights: Vec<f64> = (0..k)
        .map(|t| {
            let own = u32::from(t == z);
            let ndt = f64::from(m.doc_topic[d * k + t] - own);
            let ntw = f64::from(m.word_topic[w * k + t] - own);
            let nt = (m.topic_totals[t] - u64::from(own)) as f64;
            (ndt + m.config.alpha) * (ntw + m.config.beta) / (nt + vbeta)
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|x| x / total).collect()
}
