use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::race::{race, Candidate, Elimination, RaceSettings};
use super::sampling::{sample_candidates, SamplingSchedule};
use super::{Objective, ParamSpace, TuneError};
use crate::lda::TopicParams;
use crate::seed::{self, stream};

/// Smallest total budget `tune` accepts.
pub const MIN_TOTAL_BUDGET: usize = 100;

/// Planned number of generations before the remainder is spent in one go;
/// `2 + log2(#parameters)` for three parameters.
const PLANNED_GENERATIONS: usize = 3;

/// Relative spread below which the surviving population counts as converged.
const RESTART_SPREAD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TuneSettings {
    /// LDA runs available to the races; the final phase is accounted separately.
    pub total_budget: usize,
    pub elite_count: usize,
    pub min_blocks: usize,
    pub significance: f64,
    /// Repetitions per elite in the final phase.
    pub final_runs: usize,
    pub schedule: SamplingSchedule,
}

impl Default for TuneSettings {
    fn default() -> Self {
        Self {
            total_budget: 10_000,
            elite_count: 5,
            min_blocks: 5,
            significance: 0.05,
            final_runs: 101,
            schedule: SamplingSchedule::default(),
        }
    }
}

impl TuneSettings {
    fn race_settings(&self) -> RaceSettings {
        RaceSettings { elite_count: self.elite_count, min_blocks: self.min_blocks, significance: self.significance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IterationRecord {
    pub iteration: usize,
    /// Sampling generation; zero for the first iteration and after a restart.
    pub generation: usize,
    pub restart: bool,
    /// Budget allotted to this iteration's race.
    pub budget: usize,
    pub budget_used: usize,
    pub blocks: usize,
    pub crashes: usize,
    pub candidates: Vec<Candidate>,
    pub eliminations: Vec<Elimination>,
    pub elites: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EliteResult {
    pub id: usize,
    pub params: TopicParams,
    pub median: f64,
    pub runs: usize,
    pub crashed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BudgetAudit {
    pub total: usize,
    pub racing_used: usize,
    pub per_iteration: Vec<usize>,
    pub final_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TuneReport {
    pub best: TopicParams,
    /// Elites ordered by final median, best first.
    pub elites: Vec<EliteResult>,
    pub history: Vec<IterationRecord>,
    pub budget: BudgetAudit,
    pub restarts: usize,
    pub seed: u64,
}

impl TuneReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// Configuration table followed by the elites' final medians.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let id_w = self.elites.iter().map(|e| e.id.to_string().len()).max().unwrap_or(1).max(4);
        let _ = writeln!(out, "# Testing configurations:            (the first number is the configuration ID)");
        let _ = writeln!(out, "{:<id_w$} {:>7} {:>10} {:>10}", "", "topics", "alpha", "beta");
        for e in &self.elites {
            let _ = writeln!(
                out,
                "{:<id_w$} {:>7} {:>10} {:>10}",
                e.id,
                e.params.k,
                fmt_param(e.params.alpha),
                fmt_param(e.params.beta)
            );
        }
        let _ = writeln!(out, "# Testing of elite configurations:   (medians of {} independent runs)", self.budget.final_runs);
        let width = self.elites.iter().map(|e| format!("{:.1}", e.median).len().max(e.id.to_string().len())).max().unwrap_or(4) + 1;
        let ids: String = self.elites.iter().map(|e| format!("{:>width$}", e.id)).collect();
        let meds: String = self.elites.iter().map(|e| format!("{:>width$.1}", e.median)).collect();
        let _ = writeln!(out, "{ids}");
        let _ = writeln!(out, "{meds}");
        out
    }
}

fn fmt_param(v: f64) -> String {
    if v >= 0.01 {
        format!("{v:.3}")
    } else {
        format!("{v:.3e}")
    }
}

fn relative_spread(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    if hi <= 0.0 {
        return 0.0;
    }
    (hi - lo) / hi
}

fn converged(population: &[Candidate]) -> bool {
    population.len() >= 2
        && relative_spread(population.iter().map(|c| c.params.k as f64)) <= RESTART_SPREAD
        && relative_spread(population.iter().map(|c| c.params.alpha)) <= RESTART_SPREAD
        && relative_spread(population.iter().map(|c| c.params.beta)) <= RESTART_SPREAD
}

/// Iterated racing over `space`.
///
/// Iteration `j` (1-based) gets `remaining / (3 - j + 1)` runs, the remainder
/// once `j > 3`, and races `floor(B_j / (2 (min_blocks + min(5, j))))`
/// candidates: the elites carried over plus fresh samples. Stops when the
/// remaining budget cannot fund a race of the elites plus one newcomer. A
/// restart resets sampling to generation 0 but keeps the elites. The
/// elites of the last race are then evaluated `final_runs` times each with a
/// shared seed and ranked by median.
pub fn tune<O: Objective + ?Sized>(
    objective: &O,
    space: &ParamSpace,
    settings: &TuneSettings,
    seed: u64,
) -> Result<TuneReport, TuneError> {
    if settings.total_budget < MIN_TOTAL_BUDGET {
        return Err(TuneError::BudgetTooSmall { budget: settings.total_budget, needed: MIN_TOTAL_BUDGET });
    }
    space.validate().map_err(TuneError::InvalidSpace)?;
    let race_settings = settings.race_settings();
    let elite_count = settings.elite_count.max(1);

    let mut history: Vec<IterationRecord> = Vec::new();
    let mut elites: Vec<Candidate> = Vec::new();
    let mut used = 0usize;
    let mut next_id = 1usize;
    let mut next_block = 0u64;
    let mut generation = 0usize;
    let mut restart = false;
    let mut restarts = 0usize;

    for iteration in 1.. {
        let remaining = settings.total_budget - used;
        let share = if iteration <= PLANNED_GENERATIONS { remaining / (PLANNED_GENERATIONS - iteration + 1) } else { remaining };
        let mu = settings.min_blocks + iteration.min(5);
        let n = (share / (2 * mu.max(1))).max(elites.len() + 1).max(2);
        if n * settings.min_blocks > remaining {
            break;
        }
        let budget = share.max(n * settings.min_blocks);

        let mut rng = seed::rng_for(seed, &[stream::SAMPLE, iteration as u64]);
        let elite_params: Vec<TopicParams> = elites.iter().map(|c| c.params).collect();
        let sampled =
            sample_candidates(space, n - elites.len(), &elite_params, generation, &settings.schedule, &mut rng);
        let mut candidates = elites.clone();
        for p in sampled {
            candidates.push(Candidate { id: next_id, params: p, generation });
            next_id += 1;
        }

        let state = race(candidates.clone(), objective, &race_settings, budget, seed, next_block)?;
        used += state.budget_used;
        next_block += state.blocks as u64;
        elites = state.elites(elite_count);
        let survivors: Vec<Candidate> = state.alive_indices().into_iter().map(|c| state.candidates[c]).collect();
        history.push(IterationRecord {
            iteration,
            generation,
            restart,
            budget,
            budget_used: state.budget_used,
            blocks: state.blocks,
            crashes: state.crashes,
            candidates,
            eliminations: state.eliminations,
            elites: elites.clone(),
        });
        restart = converged(&survivors);
        if restart {
            restarts += 1;
            generation = 0;
        } else {
            generation += 1;
        }
        if used >= settings.total_budget {
            break;
        }
    }

    if elites.is_empty() {
        return Err(TuneError::BudgetTooSmall { budget: settings.total_budget, needed: 2 * settings.min_blocks });
    }
    let final_seed = seed::derive(seed, &[stream::FINAL]);
    let mut results: Vec<EliteResult> = elites
        .iter()
        .filter_map(|c| {
            objective.final_evaluation(&c.params, settings.final_runs, final_seed).map(|f| EliteResult {
                id: c.id,
                params: c.params,
                median: f.median,
                runs: f.values.len(),
                crashed: f.crashed,
            })
        })
        .collect();
    if results.is_empty() {
        return Err(TuneError::NoFinalResults);
    }
    results.sort_by(|a, b| a.median.total_cmp(&b.median).then(a.id.cmp(&b.id)));
    Ok(TuneReport {
        best: results[0].params,
        budget: BudgetAudit {
            total: settings.total_budget,
            racing_used: used,
            per_iteration: history.iter().map(|h| h.budget_used).collect(),
            final_runs: settings.final_runs,
        },
        elites: results,
        history,
        restarts,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Quadratic bowl in log space with its minimum at (20, 1, e^-2).
    struct Bowl {
        noise: f64,
    }

    impl Objective for Bowl {
        fn evaluate(&self, p: &TopicParams, instance_seed: u64) -> Result<f64, String> {
            let mut rng = seed::rng_for(instance_seed, &[p.k as u64, p.alpha.to_bits(), p.beta.to_bits()]);
            let z: f64 = rng.sample(StandardNormal);
            let f = ((p.k as f64).ln() - 20f64.ln()).powi(2) + p.alpha.ln().powi(2) + (p.beta.ln() + 2.0).powi(2);
            Ok(f + self.noise * z)
        }
    }

    fn settings(budget: usize) -> TuneSettings {
        TuneSettings { total_budget: budget, final_runs: 11, ..Default::default() }
    }

    #[test]
    fn finds_the_bowl_minimum() {
        let report = tune(&Bowl { noise: 0.01 }, &ParamSpace::default(), &settings(2000), 11).unwrap();
        let best = report.best;
        assert!((10..=40).contains(&best.k), "{best:?}");
        assert!((0.5..=2.0).contains(&best.alpha), "{best:?}");
        let b0 = (-2f64).exp();
        assert!((b0 / 2.0..=b0 * 2.0).contains(&best.beta), "{best:?}");
    }

    #[test]
    fn budget_is_respected() {
        let report = tune(&Bowl { noise: 0.01 }, &ParamSpace::default(), &settings(2000), 5).unwrap();
        assert!(report.budget.racing_used <= 2000);
        assert_eq!(report.budget.racing_used, report.budget.per_iteration.iter().sum::<usize>());
        assert!(report.history[0].candidates.iter().any(|c| c.params == TopicParams::DEFAULT));
    }

    #[test]
    fn tiny_budget_still_yields_best() {
        let report = tune(&Bowl { noise: 0.01 }, &ParamSpace::default(), &settings(100), 3).unwrap();
        assert!(!report.elites.is_empty());
        let min = report.elites.iter().map(|e| e.median).fold(f64::INFINITY, f64::min);
        assert_eq!(report.elites[0].median, min);
        assert_eq!(report.best, report.elites[0].params);
        assert!(tune(&Bowl { noise: 0.0 }, &ParamSpace::default(), &settings(99), 3).is_err());
    }

    #[test]
    fn five_elites_five_rows() {
        let report = tune(&Bowl { noise: 0.01 }, &ParamSpace::default(), &settings(2000), 2).unwrap();
        assert_eq!(report.elites.len(), 5);
        let text = report.render_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2 + 5 + 3);
        assert!(lines[0].starts_with("# Testing configurations:"));
        assert!(lines[7].starts_with("# Testing of elite configurations:"));
        assert_eq!(lines[9].split_whitespace().count(), 5);
    }

    #[test]
    fn reproducible() {
        let a = tune(&Bowl { noise: 0.05 }, &ParamSpace::default(), &settings(600), 9).unwrap();
        let b = tune(&Bowl { noise: 0.05 }, &ParamSpace::default(), &settings(600), 9).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(TuneReport::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn convergence_detection() {
        let c = |k, a, b| Candidate { id: 0, params: TopicParams::new(k, a, b), generation: 0 };
        assert!(converged(&[c(100, 1.0, 0.1), c(100, 1.005, 0.1)]));
        assert!(!converged(&[c(100, 1.0, 0.1), c(102, 1.0, 0.1)]));
        assert!(!converged(&[c(100, 1.0, 0.1)]));
    }
}
