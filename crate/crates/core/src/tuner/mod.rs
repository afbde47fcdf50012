//! Per-corpus tuning of `(k, alpha, beta)` by iterated racing: candidates are
//! raced over resampled instance blocks, statistically inferior ones are
//! dropped after a Friedman test, and survivors seed the next generation.

mod friedman;
mod race;
mod report;
mod sampling;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lda::{evaluate_config, run_once, EvalSettings, RunOutcome, TopicParams};
use crate::seed::{self, stream};
use crate::stats::median;

pub use friedman::{critical_difference, friedman_test, rank_block, rank_matrix, rank_sums, FriedmanResult};
pub use race::{race, Candidate, Elimination, RaceSettings, RaceState};
pub use report::{tune, BudgetAudit, EliteResult, IterationRecord, TuneReport, TuneSettings};
pub use sampling::{sample_candidates, SamplingSchedule};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TuneError {
    #[error("need at least 2 candidates and 2 blocks, got {candidates} x {blocks}")]
    InsufficientData { candidates: usize, blocks: usize },
    #[error("a race needs at least 2 candidates, got {0}")]
    TooFewCandidates(usize),
    #[error("budget {budget} cannot cover {needed} runs")]
    BudgetTooSmall { budget: usize, needed: usize },
    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),
    #[error("every final evaluation of every elite failed")]
    NoFinalResults,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParamSpace {
    pub k_range: (usize, usize),
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub seed_config: TopicParams,
}

impl Default for ParamSpace {
    fn default() -> Self {
        Self { k_range: (3, 1000), alpha_range: (0.001, 200.0), beta_range: (0.001, 200.0), seed_config: TopicParams::DEFAULT }
    }
}

impl ParamSpace {
    pub fn contains(&self, p: &TopicParams) -> bool {
        (self.k_range.0..=self.k_range.1).contains(&p.k)
            && (self.alpha_range.0..=self.alpha_range.1).contains(&p.alpha)
            && (self.beta_range.0..=self.beta_range.1).contains(&p.beta)
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok = self.k_range.0 >= 1
            && self.k_range.0 <= self.k_range.1
            && self.alpha_range.0 > 0.0
            && self.alpha_range.0 <= self.alpha_range.1
            && self.beta_range.0 > 0.0
            && self.beta_range.0 <= self.beta_range.1;
        if !ok {
            return Err("empty or non-positive parameter range".into());
        }
        if !self.contains(&self.seed_config) {
            return Err("seed configuration lies outside the parameter ranges".into());
        }
        Ok(())
    }
}

/// Final-phase result for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FinalEvaluation {
    pub median: f64,
    pub values: Vec<f64>,
    pub crashed: usize,
}

/// Something to minimise. Implementations must be pure functions of their
/// arguments so races are reproducible.
pub trait Objective: Sync {
    /// Cost of `params` on the instance identified by `instance_seed`.
    fn evaluate(&self, params: &TopicParams, instance_seed: u64) -> Result<f64, String>;

    /// Median cost over `runs` repetitions; callers pass the same `seed` for
    /// every configuration so the comparison is paired.
    fn final_evaluation(&self, params: &TopicParams, runs: usize, seed: u64) -> Option<FinalEvaluation> {
        let outcomes: Vec<Result<f64, String>> = (0..runs as u64)
            .into_par_iter()
            .map(|r| self.evaluate(params, seed::derive(seed, &[stream::FINAL, r])))
            .collect();
        let values: Vec<f64> = outcomes.iter().filter_map(|o| o.as_ref().ok().copied()).collect();
        let crashed = outcomes.len() - values.len();
        median(&values).map(|m| FinalEvaluation { median: m, values, crashed })
    }
}

/// Held-out LDA perplexity on one corpus; every instance is a fresh split
/// and sampler seed.
#[derive(Debug, Clone)]
pub struct LdaObjective {
    pub documents: Vec<Vec<String>>,
    pub settings: EvalSettings,
}

impl Objective for LdaObjective {
    fn evaluate(&self, params: &TopicParams, instance_seed: u64) -> Result<f64, String> {
        run_once(
            &self.documents,
            *params,
            &self.settings,
            seed::derive(instance_seed, &[stream::SPLIT]),
            seed::derive(instance_seed, &[stream::RUN]),
        )
        .map(|r| r.perplexity)
        .map_err(|e| e.to_string())
    }

    fn final_evaluation(&self, params: &TopicParams, runs: usize, seed: u64) -> Option<FinalEvaluation> {
        let eval = evaluate_config(&self.documents, *params, runs, &self.settings, seed).ok()?;
        Some(FinalEvaluation {
            median: eval.median,
            values: eval
                .runs
                .iter()
                .filter_map(|r| match r {
                    RunOutcome::Ok(e) => Some(e.perplexity),
                    RunOutcome::Crashed(_) => None,
                })
                .collect(),
            crashed: eval.crashed(),
        })
    }
}
