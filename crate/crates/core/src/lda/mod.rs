//! Latent Dirichlet allocation trained by collapsed Gibbs sampling, scored by
//! held-out perplexity.

mod eval;
mod model;
mod sampler;
mod vocab;

use serde::{Deserialize, Serialize};

pub use eval::{evaluate_config, heldout_perplexity, run_once, split_indices, ConfigEvaluation, EvalResult, EvalSettings, RunOutcome};
pub use model::{ModelReadError, TrainedModel, MODEL_FORMAT, MODEL_VERSION};
pub use sampler::{train, train_with_observer};
pub use vocab::{build_vocab, Vocabulary};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LdaError {
    #[error("no tokens to train on")]
    EmptyCorpus,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no held-out token is in the training vocabulary")]
    EmptyHeldout,
    #[error("need at least two documents to split into train and held-out sets, got {0}")]
    TooFewDocuments(usize),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("all {0} runs failed")]
    AllRunsFailed(usize),
}

/// The three tuned hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopicParams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl TopicParams {
    pub const fn new(k: usize, alpha: f64, beta: f64) -> Self {
        Self { k, alpha, beta }
    }

    /// Mallet's defaults, the usual untuned starting point.
    pub const DEFAULT: TopicParams = TopicParams::new(100, 1.0, 0.01);

    pub fn validate(&self) -> Result<(), LdaError> {
        if self.k < 1 {
            return Err(LdaError::InvalidConfig(format!("k must be at least 1, got {}", self.k)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(LdaError::InvalidConfig(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(LdaError::InvalidConfig(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric per-topic document-topic concentration.
    pub alpha: f64,
    pub beta: f64,
    /// Full Gibbs sweeps; zero leaves the random initialisation in place.
    pub iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    pub const DEFAULT_ITERATIONS: usize = 1000;

    pub fn new(params: TopicParams, iterations: usize, seed: u64) -> Self {
        Self { k: params.k, alpha: params.alpha, beta: params.beta, iterations, seed }
    }

    pub fn params(&self) -> TopicParams {
        TopicParams::new(self.k, self.alpha, self.beta)
    }

    pub fn validate(&self) -> Result<(), LdaError> {
        self.params().validate()
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self::new(TopicParams::DEFAULT, Self::DEFAULT_ITERATIONS, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(TopicParams::DEFAULT.validate().is_ok());
        assert!(TopicParams::new(0, 1.0, 0.1).validate().is_err());
        assert!(TopicParams::new(3, 0.0, 0.1).validate().is_err());
        assert!(TopicParams::new(3, 1.0, -1.0).validate().is_err());
        assert!(TopicParams::new(3, f64::NAN, 0.1).validate().is_err());
    }
}
