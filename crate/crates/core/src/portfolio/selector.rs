use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forest::{train_forest, Forest, ForestParams};
use super::matrix::PerformanceMatrix;
use super::PortfolioError;
use crate::features::{FeatureVector, FEATURE_NAMES};
use crate::seed::{self, stream};

pub const SELECTOR_FORMAT: &str = "ldatune-selector";
pub const SELECTOR_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum PairClassifier {
    /// Positive class means the second config of the pair wins.
    Forest(Forest),
    /// No informative training rows; always votes for `winner`.
    Constant { winner: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairModel {
    pub first: usize,
    pub second: usize,
    pub training_rows: usize,
    pub classifier: PairClassifier,
}

impl PairModel {
    pub fn winner(&self, x: &[f64]) -> usize {
        match &self.classifier {
            PairClassifier::Forest(f) => {
                if f.predict(x) {
                    self.second
                } else {
                    self.first
                }
            }
            PairClassifier::Constant { winner } => *winner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelectorModel {
    pub format: String,
    pub version: u32,
    pub config_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub params: ForestParams,
    pub seed: u64,
    pub pairs: Vec<PairModel>,
}

/// Trains one cost-sensitive forest per unordered pair of configurations.
///
/// For the pair `(i, j)` each corpus is a row labelled with the config that
/// scored lower and weighted by the absolute difference; tied corpora are
/// dropped. A pair without rows votes for the config with the lower mean.
pub fn train_selector(
    features: &[FeatureVector],
    matrix: &PerformanceMatrix,
    params: &ForestParams,
    seed: u64,
) -> Result<SelectorModel, PortfolioError> {
    if matrix.n_configs() < 2 {
        return Err(PortfolioError::InvalidInput("a selector needs at least 2 configurations".into()));
    }
    if features.len() != matrix.n_corpora() {
        return Err(PortfolioError::InvalidInput(format!(
            "{} feature rows for {} corpora",
            features.len(),
            matrix.n_corpora()
        )));
    }
    let m = matrix.n_configs();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let x_all: Vec<Vec<f64>> = features.iter().map(|f| f.as_slice().to_vec()).collect();
    let models = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut x = Vec::new();
            let mut y = Vec::new();
            let mut w = Vec::new();
            for (c, row) in x_all.iter().enumerate() {
                let (a, b) = (matrix.value(i, c), matrix.value(j, c));
                if a == b {
                    continue;
                }
                x.push(row.clone());
                y.push(b < a);
                w.push((a - b).abs());
            }
            let classifier = if x.is_empty() {
                let (a, b) = (matrix.row_mean(i), matrix.row_mean(j));
                let winner = match a.total_cmp(&b).then_with(|| matrix.config_ids[i].cmp(&matrix.config_ids[j])) {
                    std::cmp::Ordering::Greater => j,
                    _ => i,
                };
                PairClassifier::Constant { winner }
            } else if x.len() == 1 {
                PairClassifier::Constant { winner: if y[0] { j } else { i } }
            } else {
                PairClassifier::Forest(train_forest(&x, &y, &w, params, seed::derive(seed, &[stream::PAIR, i as u64, j as u64]))?)
            };
            Ok(PairModel { first: i, second: j, training_rows: x.len(), classifier })
        })
        .collect::<Result<Vec<_>, PortfolioError>>()?;
    Ok(SelectorModel {
        format: SELECTOR_FORMAT.into(),
        version: SELECTOR_VERSION,
        config_ids: matrix.config_ids.clone(),
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        params: *params,
        seed,
        pairs: models,
    })
}

impl SelectorModel {
    pub fn votes(&self, x: &[f64]) -> Vec<usize> {
        let mut votes = vec![0; self.config_ids.len()];
        for p in &self.pairs {
            votes[p.winner(x)] += 1;
        }
        votes
    }

    /// Index of the configuration with most pairwise wins; ties go to the
    /// smaller config id.
    pub fn select_values(&self, x: &[f64]) -> Result<usize, PortfolioError> {
        if x.len() != self.feature_names.len() || x.iter().any(|v| !v.is_finite()) {
            return Err(PortfolioError::IncompleteFeatures { expected: self.feature_names.len(), found: x.iter().filter(|v| v.is_finite()).count() });
        }
        let votes = self.votes(x);
        Ok((0..votes.len())
            .min_by(|&a, &b| votes[b].cmp(&votes[a]).then_with(|| self.config_ids[a].cmp(&self.config_ids[b])))
            .expect("at least two configs"))
    }

    pub fn select(&self, fv: &FeatureVector) -> Result<&str, PortfolioError> {
        self.select_values(fv.as_slice()).map(|c| self.config_ids[c].as_str())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("selector serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PortfolioError> {
        let model: SelectorModel = serde_json::from_str(text)?;
        if model.format != SELECTOR_FORMAT || model.version != SELECTOR_VERSION {
            return Err(PortfolioError::InvalidInput(format!(
                "unsupported selector {} v{}",
                model.format, model.version
            )));
        }
        let m = model.config_ids.len();
        if model.pairs.len() != m * (m.saturating_sub(1)) / 2 || model.feature_names.len() != FEATURE_NAMES.len() {
            return Err(PortfolioError::InvalidInput("selector pair or feature count is inconsistent".into()));
        }
        Ok(model)
    }
}

/// Impurity decrease per feature summed over every tree of every pairwise
/// forest, normalised to sum to one. All zeros when no tree ever split.
pub fn gini_importance(selector: &SelectorModel) -> Vec<(String, f64)> {
    let mut acc = vec![0.0; selector.feature_names.len()];
    for p in &selector.pairs {
        if let PairClassifier::Forest(f) = &p.classifier {
            for (a, v) in acc.iter_mut().zip(f.importance()) {
                *a += v;
            }
        }
    }
    let total: f64 = acc.iter().sum();
    if total > 0.0 {
        acc.iter_mut().for_each(|a| *a /= total);
    }
    selector.feature_names.iter().cloned().zip(acc).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{noisy_threshold_portfolio, threshold_portfolio};

    fn fv(v: f64) -> FeatureVector {
        let mut a = [0.0; 24];
        a[0] = v;
        a[5] = 1.0;
        FeatureVector(a)
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn dominant_config_always_selected() {
        let features: Vec<FeatureVector> = (0..6).map(|i| fv(i as f64)).collect();
        let m = PerformanceMatrix::from_cells(
            ids(2),
            (0..6).map(|i| format!("x{i}")).collect(),
            vec![(0..6).map(|i| Some(10.0 + i as f64)).collect(), (0..6).map(|i| Some(20.0 + i as f64)).collect()],
        )
        .unwrap();
        let s = train_selector(&features, &m, &ForestParams::default(), 1).unwrap();
        assert_eq!(s.pairs.len(), 1);
        for f in &features {
            assert_eq!(s.select(f).unwrap(), "c0");
        }
        let imp = gini_importance(&s);
        assert!(imp.iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn seventeen_configs_make_136_pairs() {
        let features: Vec<FeatureVector> = (0..3).map(|i| fv(i as f64)).collect();
        let cells = (0..17).map(|c| (0..3).map(|j| Some(((c * 7 + j * 3) % 11) as f64)).collect()).collect();
        let m = PerformanceMatrix::from_cells(ids(17), ids(3), cells).unwrap();
        let s = train_selector(&features, &m, &ForestParams { trees: 5, ..Default::default() }, 1).unwrap();
        assert_eq!(s.pairs.len(), 136);
        assert_eq!(SelectorModel::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn condorcet_cycle_breaks_lexicographically() {
        let s = SelectorModel {
            format: SELECTOR_FORMAT.into(),
            version: SELECTOR_VERSION,
            config_ids: vec!["b".into(), "a".into(), "c".into()],
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            params: ForestParams::default(),
            seed: 0,
            pairs: vec![
                PairModel { first: 0, second: 1, training_rows: 0, classifier: PairClassifier::Constant { winner: 0 } },
                PairModel { first: 0, second: 2, training_rows: 0, classifier: PairClassifier::Constant { winner: 2 } },
                PairModel { first: 1, second: 2, training_rows: 0, classifier: PairClassifier::Constant { winner: 1 } },
            ],
        };
        assert_eq!(s.votes(&[0.0; 24]), vec![1, 1, 1]);
        assert_eq!(s.select(&fv(0.0)).unwrap(), "a");
        assert!(s.select_values(&[0.0; 23]).is_err());
        let mut bad = [0.0; 24];
        bad[3] = f64::NAN;
        assert!(matches!(s.select_values(&bad), Err(PortfolioError::IncompleteFeatures { .. })));
    }

    #[test]
    fn increasing_feature_maps_leave_selection_unchanged() {
        let (rows, m) = noisy_threshold_portfolio(10, 8);
        let features: Vec<FeatureVector> = rows.iter().map(|r| r.features).collect();
        let warped: Vec<FeatureVector> = features
            .iter()
            .map(|f| {
                let mut g = *f;
                g.0[6] = g.0[6].ln();
                g.0[0] = g.0[0].powi(3) + 1.0;
                g.0[13] = (g.0[13] / 100.0).exp();
                g
            })
            .collect();
        let params = ForestParams { trees: 30, ..Default::default() };
        let a = train_selector(&features, &m, &params, 5).unwrap();
        let b = train_selector(&warped, &m, &params, 5).unwrap();
        for (f, g) in features.iter().zip(&warped) {
            assert_eq!(a.select(f).unwrap(), b.select(g).unwrap());
        }
    }

    #[test]
    fn threshold_rule_is_learned() {
        let (rows, m) = threshold_portfolio(8, 3);
        let features: Vec<FeatureVector> = rows.iter().map(|r| r.features).collect();
        let s = train_selector(&features, &m, &ForestParams::default(), 4).unwrap();
        let pair = s.pairs.iter().find(|p| p.first == 0 && p.second == 1).unwrap();
        let correct = (0..m.n_corpora())
            .filter(|&j| pair.winner(features[j].as_slice()) == if m.value(0, j) < m.value(1, j) { 0 } else { 1 })
            .count();
        assert!(correct as f64 / m.n_corpora() as f64 >= 0.95);
        let imp = gini_importance(&s);
        let top = imp.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert_eq!(top.0, "corpusWords");
        assert!((imp.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
