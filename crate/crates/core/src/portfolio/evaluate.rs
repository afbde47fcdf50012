use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forest::ForestParams;
use super::matrix::{single_best, virtual_best, PerformanceMatrix};
use super::selector::{gini_importance, train_selector};
use super::PortfolioError;
use crate::features::{format_value, FeatureVector};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorpusChoice {
    pub corpus_id: String,
    /// Choice of the selector trained without this corpus.
    pub predicted: String,
    pub predicted_value: f64,
    /// Choice of the selector trained on every corpus.
    pub training_predicted: String,
    pub training_value: f64,
    pub best: String,
    pub best_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelectionReport {
    pub protocol: String,
    pub choices: Vec<CorpusChoice>,
    pub avg_predicted: f64,
    pub avg_training: f64,
    pub avg_vbs: f64,
    pub single_best: String,
    pub avg_single_best: f64,
    pub default_config: Option<String>,
    pub avg_default: Option<f64>,
    /// Fraction of corpora where the held-out prediction is as good as the VBS.
    pub agreement: f64,
    /// Importance of the selector trained on every corpus, descending.
    pub importances: Vec<(String, f64)>,
}

/// Leave-one-out evaluation of the pairwise selector, with training-set
/// predictions and the usual baselines reported alongside.
pub fn evaluate_selector(
    features: &[FeatureVector],
    matrix: &PerformanceMatrix,
    params: &ForestParams,
    seed: u64,
    default_config: Option<&str>,
) -> Result<SelectionReport, PortfolioError> {
    let n = matrix.n_corpora();
    if n < 3 {
        return Err(PortfolioError::InvalidInput(format!("leave-one-out needs at least 3 corpora, got {n}")));
    }
    if features.len() != n {
        return Err(PortfolioError::InvalidInput(format!("{} feature rows for {n} corpora", features.len())));
    }
    let default_idx = match default_config {
        Some(id) => Some(
            matrix.config_index(id).ok_or_else(|| PortfolioError::InvalidInput(format!("unknown default config {id:?}")))?,
        ),
        None => None,
    };
    let full = train_selector(features, matrix, params, seed)?;
    let held_out: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|j| {
            let keep: Vec<usize> = (0..n).filter(|&c| c != j).collect();
            let sub = matrix.select_corpora(&keep);
            let fs: Vec<FeatureVector> = keep.iter().map(|&c| features[c]).collect();
            let s = train_selector(&fs, &sub, params, seed::derive(seed, &[j as u64]))?;
            s.select_values(features[j].as_slice())
        })
        .collect::<Result<_, _>>()?;
    let (vbs, avg_vbs) = virtual_best(matrix);
    let (sb, avg_sb) = single_best(matrix);
    let mut choices = Vec::with_capacity(n);
    for j in 0..n {
        let t = full.select_values(features[j].as_slice())?;
        choices.push(CorpusChoice {
            corpus_id: matrix.corpus_ids[j].clone(),
            predicted: matrix.config_ids[held_out[j]].clone(),
            predicted_value: matrix.value(held_out[j], j),
            training_predicted: matrix.config_ids[t].clone(),
            training_value: matrix.value(t, j),
            best: matrix.config_ids[vbs[j]].clone(),
            best_value: matrix.value(vbs[j], j),
        });
    }
    let mean = |f: &dyn Fn(&CorpusChoice) -> f64| choices.iter().map(f).sum::<f64>() / n as f64;
    let mut importances = gini_importance(&full);
    importances.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(SelectionReport {
        protocol: "leave-one-out".into(),
        avg_predicted: mean(&|c| c.predicted_value),
        avg_training: mean(&|c| c.training_value),
        avg_vbs,
        single_best: matrix.config_ids[sb].clone(),
        avg_single_best: avg_sb,
        default_config: default_idx.map(|d| matrix.config_ids[d].clone()),
        avg_default: default_idx.map(|d| matrix.row_mean(d)),
        agreement: choices.iter().filter(|c| c.predicted_value <= c.best_value).count() as f64 / n as f64,
        importances,
        choices,
    })
}

impl SelectionReport {
    /// Per-corpus rows followed by one summary row per baseline.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), PortfolioError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["corpusId", "predicted", "predictedValue", "trainingPredicted", "trainingValue", "vbs", "vbsValue"])?;
        for c in &self.choices {
            w.write_record([
                c.corpus_id.as_str(),
                &c.predicted,
                &format_value(c.predicted_value),
                &c.training_predicted,
                &format_value(c.training_value),
                &c.best,
                &format_value(c.best_value),
            ])?;
        }
        for (name, v) in self.summary() {
            w.write_record([name.as_str(), "", &format_value(v), "", "", "", ""])?;
        }
        w.flush()?;
        Ok(())
    }

    fn summary(&self) -> Vec<(String, f64)> {
        let mut s = vec![
            ("#vbs".to_string(), self.avg_vbs),
            ("#predicted".to_string(), self.avg_predicted),
            ("#training".to_string(), self.avg_training),
            (format!("#singleBest:{}", self.single_best), self.avg_single_best),
        ];
        if let (Some(d), Some(v)) = (&self.default_config, self.avg_default) {
            s.push((format!("#default:{d}"), v));
        }
        s
    }

    pub fn render_table(&self) -> String {
        let w = self.choices.iter().map(|c| c.corpus_id.len()).max().unwrap_or(6).max(6);
        let cw = self
            .choices
            .iter()
            .flat_map(|c| [c.predicted.len(), c.best.len()])
            .max()
            .unwrap_or(9)
            .max(9);
        let mut out = String::new();
        let _ = writeln!(out, "{:<w$}  {:<cw$} {:>10}  {:<cw$} {:>10}", "corpus", "predicted", "value", "vbs", "value");
        for c in &self.choices {
            let _ = writeln!(
                out,
                "{:<w$}  {:<cw$} {:>10.2}  {:<cw$} {:>10.2}",
                c.corpus_id, c.predicted, c.predicted_value, c.best, c.best_value
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "virtual best        {:>10.2}", self.avg_vbs);
        let _ = writeln!(out, "selector ({})  {:>10.2}", self.protocol, self.avg_predicted);
        let _ = writeln!(out, "selector (training) {:>10.2}", self.avg_training);
        let _ = writeln!(out, "single best {:<8}{:>10.2}", self.single_best, self.avg_single_best);
        if let (Some(d), Some(v)) = (&self.default_config, self.avg_default) {
            let _ = writeln!(out, "default {:<12}{:>10.2}", d, v);
        }
        let _ = writeln!(out, "agreement with vbs  {:>9.1}%", 100.0 * self.agreement);
        out
    }
}

/// Importance ranking as `feature,importance`, already in descending order.
pub fn write_importance_csv<W: Write>(writer: W, importances: &[(String, f64)]) -> Result<(), PortfolioError> {
    let mut sorted = importances.to_vec();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["feature", "importance"])?;
    for (f, v) in &sorted {
        w.write_record([f.as_str(), &format_value(*v)])?;
    }
    w.flush()?;
    Ok(())
}
