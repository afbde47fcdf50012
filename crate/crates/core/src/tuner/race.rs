use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::friedman::{critical_difference, friedman_test, rank_matrix, rank_sums};
use super::{Objective, TuneError};
use crate::lda::TopicParams;
use crate::seed::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Candidate {
    pub id: usize,
    pub params: TopicParams,
    pub generation: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RaceSettings {
    /// The race stops once this few candidates remain.
    pub elite_count: usize,
    /// Blocks every candidate sees before the first test.
    pub min_blocks: usize,
    pub significance: f64,
}

impl Default for RaceSettings {
    fn default() -> Self {
        Self { elite_count: 5, min_blocks: 5, significance: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Elimination {
    pub candidate: usize,
    /// Number of blocks completed when the candidate was dropped.
    pub block: usize,
    pub budget_used: usize,
    pub rank_sum_gap: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RaceState {
    pub candidates: Vec<Candidate>,
    pub alive: Vec<bool>,
    /// `results[c][b]`: cost of candidate `c` on block `b`; `None` once eliminated.
    #[serde(skip)]
    pub results: Vec<Vec<Option<f64>>>,
    pub budget_used: usize,
    pub blocks: usize,
    /// Alive count at the start of each block.
    pub alive_per_block: Vec<usize>,
    pub eliminations: Vec<Elimination>,
    pub crashes: usize,
    pub generation: usize,
}

impl RaceState {
    pub fn alive_indices(&self) -> Vec<usize> {
        (0..self.candidates.len()).filter(|&c| self.alive[c]).collect()
    }

    /// Surviving candidates ordered by rank sum over all blocks (ties by mean
    /// cost, then id), truncated to `count`.
    pub fn elites(&self, count: usize) -> Vec<Candidate> {
        let alive = self.alive_indices();
        let values: Vec<Vec<f64>> =
            alive.iter().map(|&c| self.results[c].iter().map(|v| v.unwrap_or(f64::INFINITY)).collect()).collect();
        let sums = if self.blocks > 0 { rank_sums(&rank_matrix(&values)) } else { vec![0.0; alive.len()] };
        let means: Vec<f64> = values.iter().map(|v| v.iter().sum::<f64>() / v.len().max(1) as f64).collect();
        let mut order: Vec<usize> = (0..alive.len()).collect();
        order.sort_by(|&a, &b| {
            sums[a]
                .total_cmp(&sums[b])
                .then(means[a].total_cmp(&means[b]))
                .then(self.candidates[alive[a]].id.cmp(&self.candidates[alive[b]].id))
        });
        order.into_iter().take(count).map(|i| self.candidates[alive[i]]).collect()
    }
}

/// Races `candidates` on successive instance blocks.
///
/// Block `b` of the race is instance `first_block + b`; its seed comes from
/// `seed`, so every candidate sees the same instances. After `min_blocks`
/// blocks a Friedman test runs after every block, and on rejection each
/// candidate whose rank sum trails the best by more than the critical
/// difference is dropped. Stops when the next block would overrun `budget`
/// or, after the first test, when at most `elite_count` candidates remain.
pub fn race<O: Objective + ?Sized>(
    candidates: Vec<Candidate>,
    objective: &O,
    settings: &RaceSettings,
    budget: usize,
    seed: u64,
    first_block: u64,
) -> Result<RaceState, TuneError> {
    if candidates.len() < 2 {
        return Err(TuneError::TooFewCandidates(candidates.len()));
    }
    let needed = candidates.len() * settings.min_blocks;
    if budget < needed {
        return Err(TuneError::BudgetTooSmall { budget, needed });
    }
    let n = candidates.len();
    let mut state = RaceState {
        generation: candidates.iter().map(|c| c.generation).max().unwrap_or(0),
        candidates,
        alive: vec![true; n],
        results: vec![Vec::new(); n],
        budget_used: 0,
        blocks: 0,
        alive_per_block: Vec::new(),
        eliminations: Vec::new(),
        crashes: 0,
    };

    loop {
        let alive = state.alive_indices();
        if state.budget_used + alive.len() > budget {
            break;
        }
        if state.blocks >= settings.min_blocks && alive.len() <= settings.elite_count.max(1) {
            break;
        }
        let instance_seed = seed::derive(seed, &[stream::BLOCK, first_block + state.blocks as u64]);
        let costs: Vec<Result<f64, String>> = alive
            .par_iter()
            .map(|&c| objective.evaluate(&state.candidates[c].params, instance_seed))
            .collect();
        for c in (0..n).filter(|&c| !state.alive[c]) {
            state.results[c].push(None);
        }
        for (&c, cost) in alive.iter().zip(costs) {
            let v = match cost {
                Ok(v) if v.is_finite() => v,
                _ => {
                    state.crashes += 1;
                    f64::INFINITY
                }
            };
            state.results[c].push(Some(v));
        }
        state.alive_per_block.push(alive.len());
        state.budget_used += alive.len();
        state.blocks += 1;

        if state.blocks >= settings.min_blocks && alive.len() >= 2 {
            eliminate(&mut state, &alive, settings);
        }
    }
    Ok(state)
}

fn eliminate(state: &mut RaceState, alive: &[usize], settings: &RaceSettings) {
    let values: Vec<Vec<f64>> =
        alive.iter().map(|&c| state.results[c].iter().map(|v| v.expect("alive candidates have every block")).collect()).collect();
    let ranks = rank_matrix(&values);
    let Ok(test) = friedman_test(&ranks) else { return };
    if test.p_value >= settings.significance {
        return;
    }
    let sums = rank_sums(&ranks);
    let best = sums.iter().copied().fold(f64::INFINITY, f64::min);
    let cd = critical_difference(alive.len(), state.blocks, settings.significance);
    for (i, &c) in alive.iter().enumerate() {
        let gap = sums[i] - best;
        if gap > cd {
            state.alive[c] = false;
            state.eliminations.push(Elimination {
                candidate: state.candidates[c].id,
                block: state.blocks,
                budget_used: state.budget_used,
                rank_sum_gap: gap,
                p_value: test.p_value,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cost depends only on `k`; optional per-instance jitter.
    struct ByK {
        jitter: f64,
    }

    impl Objective for ByK {
        fn evaluate(&self, p: &TopicParams, instance_seed: u64) -> Result<f64, String> {
            let u = (seed::derive(instance_seed, &[p.k as u64]) % 1000) as f64 / 1000.0;
            Ok(p.k as f64 + self.jitter * u)
        }
    }

    fn cands(ks: &[usize]) -> Vec<Candidate> {
        ks.iter().enumerate().map(|(id, &k)| Candidate { id, params: TopicParams::new(k, 1.0, 0.1), generation: 0 }).collect()
    }

    #[test]
    fn dominated_candidate_falls_at_first_test() {
        let settings = RaceSettings { elite_count: 1, ..Default::default() };
        let state = race(cands(&[10, 20]), &ByK { jitter: 0.5 }, &settings, 100, 1, 0).unwrap();
        assert_eq!(state.eliminations.len(), 1);
        assert_eq!(state.eliminations[0].candidate, 1);
        assert_eq!(state.eliminations[0].block, 5);
        assert_eq!(state.blocks, 5);
        assert_eq!(state.elites(1)[0].id, 0);
    }

    #[test]
    fn identical_candidates_run_until_budget() {
        let settings = RaceSettings { elite_count: 1, ..Default::default() };
        let state = race(cands(&[7, 7, 7]), &ByK { jitter: 0.0 }, &settings, 31, 1, 0).unwrap();
        assert!(state.eliminations.is_empty());
        assert_eq!(state.budget_used, 30);
        assert_eq!(state.blocks, 10);
    }

    #[test]
    fn budget_accounting_identity() {
        let state =
            race(cands(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]), &ByK { jitter: 3.0 }, &RaceSettings::default(), 400, 3, 0)
                .unwrap();
        assert_eq!(state.budget_used, state.alive_per_block.iter().sum::<usize>());
        assert!(state.budget_used <= 400);
        assert!(state.alive[0]);
    }

    #[test]
    fn budget_too_small() {
        let err = race(cands(&[1, 2, 3]), &ByK { jitter: 0.0 }, &RaceSettings::default(), 14, 0, 0).unwrap_err();
        assert_eq!(err, TuneError::BudgetTooSmall { budget: 14, needed: 15 });
        assert_eq!(race(cands(&[1]), &ByK { jitter: 0.0 }, &RaceSettings::default(), 99, 0, 0).unwrap_err(), TuneError::TooFewCandidates(1));
    }

    #[test]
    fn crashes_rank_last() {
        struct Crashy;
        impl Objective for Crashy {
            fn evaluate(&self, p: &TopicParams, _: u64) -> Result<f64, String> {
                if p.k == 3 { Err("boom".into()) } else { Ok(p.k as f64) }
            }
        }
        let settings = RaceSettings { elite_count: 1, ..Default::default() };
        let state = race(cands(&[5, 3, 4, 6]), &Crashy, &settings, 200, 0, 0).unwrap();
        assert!(state.crashes > 0);
        assert!(!state.alive[1]);
        assert!(state.alive[0] || state.alive[2]);
    }
}
