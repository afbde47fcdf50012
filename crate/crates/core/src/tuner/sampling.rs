use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ParamSpace;
use crate::lda::TopicParams;

/// Spread of the perturbation around elites, halved each generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SamplingSchedule {
    pub k_sigma: f64,
    pub log_sigma: f64,
}

impl Default for SamplingSchedule {
    fn default() -> Self {
        Self { k_sigma: 250.0, log_sigma: 1.0 }
    }
}

impl SamplingSchedule {
    /// Sigmas used when generating generation `generation` (>= 1).
    pub fn at(&self, generation: usize) -> (f64, f64) {
        let halvings = generation.saturating_sub(1).min(1000) as i32;
        let f = 0.5f64.powi(halvings);
        (self.k_sigma * f, self.log_sigma * f)
    }
}

const MAX_REJECTIONS: usize = 64;

/// Generation 0 draws `k` uniformly and `alpha`, `beta` log-uniformly, always
/// starting with the space's seed configuration. Later generations perturb a
/// uniformly chosen elite with truncated Gaussians (`k` on the integer scale,
/// `alpha` and `beta` in log space).
pub fn sample_candidates<R: Rng>(
    space: &ParamSpace,
    n: usize,
    elites: &[TopicParams],
    generation: usize,
    schedule: &SamplingSchedule,
    rng: &mut R,
) -> Vec<TopicParams> {
    if generation == 0 || elites.is_empty() {
        let mut out = Vec::with_capacity(n);
        if n > 0 {
            out.push(space.seed_config);
        }
        while out.len() < n {
            out.push(TopicParams::new(
                rng.random_range(space.k_range.0..=space.k_range.1),
                log_uniform(space.alpha_range, rng),
                log_uniform(space.beta_range, rng),
            ));
        }
        return out;
    }
    let (k_sigma, log_sigma) = schedule.at(generation);
    (0..n)
        .map(|_| {
            let parent = elites[rng.random_range(0..elites.len())];
            let k = truncated(parent.k as f64, k_sigma, (space.k_range.0 as f64, space.k_range.1 as f64), true, rng);
            let alpha = truncated_log(parent.alpha, log_sigma, space.alpha_range, rng);
            let beta = truncated_log(parent.beta, log_sigma, space.beta_range, rng);
            TopicParams::new(k as usize, alpha, beta)
        })
        .collect()
}

fn log_uniform<R: Rng>((lo, hi): (f64, f64), rng: &mut R) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp().clamp(lo, hi)
}

fn truncated<R: Rng>(mean: f64, sigma: f64, (lo, hi): (f64, f64), round: bool, rng: &mut R) -> f64 {
    let mut x = mean;
    for _ in 0..MAX_REJECTIONS {
        let z: f64 = StandardNormal.sample(rng);
        x = mean + sigma * z;
        if round {
            x = x.round();
        }
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
    x.clamp(lo, hi)
}

fn truncated_log<R: Rng>(mean: f64, log_sigma: f64, (lo, hi): (f64, f64), rng: &mut R) -> f64 {
    truncated(mean.ln(), log_sigma, (lo.ln(), hi.ln()), false, rng).exp().clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn generation_zero_contains_seed_config() {
        let space = ParamSpace::default();
        let c = sample_candidates(&space, 5, &[], 0, &SamplingSchedule::default(), &mut seed::rng(1));
        assert_eq!(c.len(), 5);
        assert_eq!(c.iter().filter(|p| **p == TopicParams::new(100, 1.0, 0.01)).count(), 1);
        assert!(c.iter().all(|p| space.contains(p)));
    }

    #[test]
    fn vanishing_sigma_reproduces_the_elite() {
        let space = ParamSpace::default();
        let elite = TopicParams::new(321, 2.5, 0.07);
        let c = sample_candidates(&space, 20, &[elite; 3], 80, &SamplingSchedule::default(), &mut seed::rng(2));
        for p in c {
            assert_eq!(p.k, elite.k);
            assert!((p.alpha / elite.alpha - 1.0).abs() < 1e-12);
            assert!((p.beta / elite.beta - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn log_uniform_alpha_median_is_geometric_midpoint() {
        let space = ParamSpace::default();
        let c = sample_candidates(&space, 10_000, &[], 0, &SamplingSchedule::default(), &mut seed::rng(3));
        let midpoint = (0.001f64 * 200.0).sqrt();
        assert!((midpoint - 0.447).abs() < 1e-3);
        let below = c.iter().filter(|p| p.alpha < midpoint).count() as f64 / c.len() as f64;
        assert!((below - 0.5).abs() < 0.02, "{below}");
    }

    #[test]
    fn perturbations_stay_in_range() {
        let space = ParamSpace::default();
        let edge = TopicParams::new(3, 200.0, 0.001);
        let c = sample_candidates(&space, 500, &[edge], 1, &SamplingSchedule::default(), &mut seed::rng(4));
        assert!(c.iter().all(|p| space.contains(p)));
    }

    #[test]
    fn schedule_halves() {
        let s = SamplingSchedule::default();
        assert_eq!(s.at(1), (250.0, 1.0));
        assert_eq!(s.at(3), (62.5, 0.25));
    }
}
