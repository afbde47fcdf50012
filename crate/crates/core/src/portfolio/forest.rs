use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PortfolioError;
use crate::seed::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ForestParams {
    pub trees: usize,
    /// Features tried per node; `None` means `floor(sqrt(p))`.
    pub mtry: Option<usize>,
    /// Nodes with fewer bootstrap rows become leaves.
    pub min_split: usize,
    pub max_depth: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { trees: 100, mtry: None, min_split: 2, max_depth: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Node {
    /// Class mass `[negative, positive]` of the rows reaching the leaf.
    Leaf { mass: [f64; 2] },
    #[serde(rename_all = "camelCase")]
    Split { feature: usize, threshold: f64, gain: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Probability of the positive class.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { mass } => {
                    let total = mass[0] + mass[1];
                    return if total > 0.0 { mass[1] / total } else { 0.5 };
                }
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn add_importance(&self, acc: &mut [f64]) {
        for n in &self.nodes {
            if let Node::Split { feature, gain, .. } = n {
                acc[*feature] += gain;
            }
        }
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Forest {
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Mean of the trees' soft votes for the positive class.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_proba(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.predict_proba(x) > 0.5
    }

    /// Unnormalised impurity decrease per feature.
    pub fn importance(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_features];
        for t in &self.trees {
            t.add_importance(&mut acc);
        }
        acc
    }
}

fn gini(mass: [f64; 2]) -> f64 {
    let total = mass[0] + mass[1];
    if total <= 0.0 {
        return 0.0;
    }
    let p = mass[1] / total;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    mtry: usize,
    params: &'a ForestParams,
    nodes: Vec<Node>,
}

/// Row of the bootstrap sample with its multiplicity.
#[derive(Clone, Copy)]
struct Entry {
    row: usize,
    weight: f64,
}

impl Builder<'_> {
    fn mass(&self, entries: &[Entry]) -> [f64; 2] {
        let mut m = [0.0; 2];
        for e in entries {
            m[usize::from(self.y[e.row])] += e.weight;
        }
        m
    }

    /// Best `(gain, threshold)` for splitting `entries` on `feature`.
    fn best_threshold(&self, entries: &mut [Entry], feature: usize, parent: [f64; 2]) -> Option<(f64, f64)> {
        entries.sort_by(|a, b| self.x[a.row][feature].total_cmp(&self.x[b.row][feature]));
        let total = parent[0] + parent[1];
        let parent_impurity = total * gini(parent);
        let mut left = [0.0; 2];
        let mut best: Option<(f64, f64)> = None;
        for i in 0..entries.len() - 1 {
            let e = entries[i];
            left[usize::from(self.y[e.row])] += e.weight;
            let (a, b) = (self.x[e.row][feature], self.x[entries[i + 1].row][feature]);
            if a == b {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1]];
            let gain = parent_impurity - (left[0] + left[1]) * gini(left) - (right[0] + right[1]) * gini(right);
            if gain > 1e-12 && best.is_none_or(|(g, _)| gain > g) {
                let mid = a + (b - a) / 2.0;
                // guard against midpoints that round onto the upper value
                let threshold = if mid < b { mid } else { a };
                best = Some((gain, threshold));
            }
        }
        best
    }

    fn build<R: rand::Rng>(&mut self, entries: &mut [Entry], depth: usize, rng: &mut R) -> usize {
        let id = self.nodes.len();
        let mass = self.mass(entries);
        self.nodes.push(Node::Leaf { mass });
        let count: f64 = entries.iter().map(|e| e.weight).sum();
        let pure = mass[0] == 0.0 || mass[1] == 0.0;
        if pure || count < self.params.min_split as f64 || self.params.max_depth.is_some_and(|d| depth >= d) {
            return id;
        }
        let mut features: Vec<usize> = (0..self.x[0].len()).collect();
        features.shuffle(rng);
        let mut best: Option<(f64, f64, usize)> = None;
        for (tried, &f) in features.iter().enumerate() {
            if tried >= self.mtry && best.is_some() {
                break;
            }
            if let Some((gain, threshold)) = self.best_threshold(entries, f, mass) {
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, threshold, f));
                }
            }
        }
        let Some((gain, threshold, feature)) = best else { return id };
        entries.sort_by(|a, b| self.x[a.row][feature].total_cmp(&self.x[b.row][feature]));
        let cut = entries.partition_point(|e| self.x[e.row][feature] <= threshold);
        let (l, r) = entries.split_at_mut(cut);
        let left = self.build(l, depth + 1, rng);
        let right = self.build(r, depth + 1, rng);
        self.nodes[id] = Node::Split { feature, threshold, gain, left, right };
        id
    }
}

fn validate(x: &[Vec<f64>], y: &[bool], w: &[f64]) -> Result<usize, PortfolioError> {
    if x.len() < 2 || x.len() != y.len() || x.len() != w.len() {
        return Err(PortfolioError::InvalidInput(format!(
            "need at least 2 aligned rows, got {} rows, {} labels, {} costs",
            x.len(),
            y.len(),
            w.len()
        )));
    }
    let p = x[0].len();
    if p == 0 || x.iter().any(|r| r.len() != p) {
        return Err(PortfolioError::InvalidInput("feature rows must share a non-zero width".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(PortfolioError::InvalidInput("feature values must be finite".into()));
    }
    if w.iter().any(|c| !(c.is_finite() && *c >= 0.0)) || w.iter().all(|c| *c == 0.0) {
        return Err(PortfolioError::InvalidInput("costs must be non-negative with a positive total".into()));
    }
    Ok(p)
}

/// Cost-sensitive random forest: every tree grows on a bootstrap sample
/// whose rows are drawn with probability proportional to their cost.
pub fn train_forest(
    x: &[Vec<f64>],
    y: &[bool],
    w: &[f64],
    params: &ForestParams,
    seed: u64,
) -> Result<Forest, PortfolioError> {
    let p = validate(x, y, w)?;
    if params.trees == 0 {
        return Err(PortfolioError::InvalidInput("a forest needs at least one tree".into()));
    }
    let mtry = params.mtry.unwrap_or_else(|| (p as f64).sqrt().floor() as usize).clamp(1, p);
    let sampler = WeightedIndex::new(w).expect("weights validated");
    let trees = (0..params.trees as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng_for(seed, &[stream::TREE, t]);
            let mut counts = vec![0usize; x.len()];
            for _ in 0..x.len() {
                counts[sampler.sample(&mut rng)] += 1;
            }
            let mut entries: Vec<Entry> =
                counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(row, &c)| Entry { row, weight: c as f64 }).collect();
            let mut b = Builder { x, y, mtry, params, nodes: Vec::new() };
            b.build(&mut entries, 0, &mut rng);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(Forest { n_features: p, trees })
}
