use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PortfolioError;
use crate::features::format_value;
use crate::lda::{evaluate_config, EvalSettings, TopicParams};
use crate::seed::{self, stream};

/// Written in place of a value for cells whose evaluation failed.
pub const CRASH_SENTINEL: &str = "crash";

/// Median perplexity of every configuration on every corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PerformanceMatrix {
    pub config_ids: Vec<String>,
    pub corpus_ids: Vec<String>,
    /// `values[config][corpus]`, finite after imputation.
    pub values: Vec<Vec<f64>>,
    pub crashed: Vec<Vec<bool>>,
}

impl PerformanceMatrix {
    /// Builds a matrix from raw cells; `None` or non-finite cells count as
    /// crashes and receive the largest value observed anywhere in the matrix.
    pub fn from_cells(
        config_ids: Vec<String>,
        corpus_ids: Vec<String>,
        cells: Vec<Vec<Option<f64>>>,
    ) -> Result<Self, PortfolioError> {
        if cells.len() != config_ids.len() || cells.iter().any(|r| r.len() != corpus_ids.len()) {
            return Err(PortfolioError::InvalidInput(format!(
                "matrix cells do not match {} configs x {} corpora",
                config_ids.len(),
                corpus_ids.len()
            )));
        }
        if config_ids.is_empty() || corpus_ids.is_empty() {
            return Err(PortfolioError::InvalidInput("matrix needs at least one config and one corpus".into()));
        }
        let max = cells
            .iter()
            .flatten()
            .filter_map(|c| c.filter(|v| v.is_finite()))
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(PortfolioError::NoData);
        }
        let crashed: Vec<Vec<bool>> =
            cells.iter().map(|r| r.iter().map(|c| !c.is_some_and(|v| v.is_finite())).collect()).collect();
        let values = cells
            .iter()
            .map(|r| r.iter().map(|c| c.filter(|v| v.is_finite()).unwrap_or(max)).collect())
            .collect();
        Ok(Self { config_ids, corpus_ids, values, crashed })
    }

    pub fn n_configs(&self) -> usize {
        self.config_ids.len()
    }

    pub fn n_corpora(&self) -> usize {
        self.corpus_ids.len()
    }

    pub fn value(&self, config: usize, corpus: usize) -> f64 {
        self.values[config][corpus]
    }

    pub fn config_index(&self, id: &str) -> Option<usize> {
        self.config_ids.iter().position(|c| c == id)
    }

    pub fn row_mean(&self, config: usize) -> f64 {
        self.values[config].iter().sum::<f64>() / self.n_corpora() as f64
    }

    pub fn crash_count(&self) -> usize {
        self.crashed.iter().flatten().filter(|&&c| c).count()
    }

    /// The matrix restricted to the given corpus columns.
    pub fn select_corpora(&self, corpora: &[usize]) -> Self {
        Self {
            config_ids: self.config_ids.clone(),
            corpus_ids: corpora.iter().map(|&j| self.corpus_ids[j].clone()).collect(),
            values: self.values.iter().map(|r| corpora.iter().map(|&j| r[j]).collect()).collect(),
            crashed: self.crashed.iter().map(|r| corpora.iter().map(|&j| r[j]).collect()).collect(),
        }
    }

    /// CSV with one row per corpus and one column per configuration; crashed
    /// cells are written as the sentinel.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), PortfolioError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["corpusId".to_string()];
        header.extend(self.config_ids.iter().cloned());
        w.write_record(&header)?;
        for (j, corpus) in self.corpus_ids.iter().enumerate() {
            let mut rec = vec![corpus.clone()];
            for c in 0..self.n_configs() {
                rec.push(if self.crashed[c][j] { CRASH_SENTINEL.into() } else { format_value(self.values[c][j]) });
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, PortfolioError> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.len() < 2 || &header[0] != "corpusId" {
            return Err(PortfolioError::Malformed { line: 1, reason: "header must be corpusId followed by config ids".into() });
        }
        let config_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut corpus_ids = Vec::new();
        let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); config_ids.len()];
        for rec in r.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != header.len() {
                return Err(PortfolioError::Malformed {
                    line,
                    reason: format!("expected {} fields, found {}", header.len(), rec.len()),
                });
            }
            corpus_ids.push(rec[0].to_string());
            for (c, field) in rec.iter().skip(1).enumerate() {
                let field = field.trim();
                let v = if field == CRASH_SENTINEL {
                    None
                } else {
                    Some(field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| PortfolioError::Malformed {
                        line,
                        reason: format!("column {}: not a number: {field:?}", config_ids[c]),
                    })?)
                };
                cells[c].push(v);
            }
        }
        Self::from_cells(config_ids, corpus_ids, cells)
    }
}

/// Evaluates every configuration on every corpus. Cells run in parallel;
/// all configurations on a corpus share that corpus' split and run seeds.
pub fn build_performance_matrix<S: AsRef<str> + Clone + Sync + Send>(
    configs: &[(String, TopicParams)],
    corpora: &[(String, Vec<Vec<S>>)],
    runs: usize,
    settings: &EvalSettings,
    seed: u64,
) -> Result<PerformanceMatrix, PortfolioError> {
    if configs.len() < 2 || corpora.len() < 2 {
        return Err(PortfolioError::InvalidInput(format!(
            "need at least 2 configs and 2 corpora, got {} and {}",
            configs.len(),
            corpora.len()
        )));
    }
    let cells: Vec<Option<f64>> = (0..configs.len() * corpora.len())
        .into_par_iter()
        .map(|cell| {
            let (c, j) = (cell / corpora.len(), cell % corpora.len());
            evaluate_config(&corpora[j].1, configs[c].1, runs, settings, seed::derive(seed, &[stream::CELL, j as u64]))
                .ok()
                .filter(|e| e.crashed() == 0)
                .map(|e| e.median)
        })
        .collect();
    let cells = cells.chunks(corpora.len()).map(<[Option<f64>]>::to_vec).collect();
    PerformanceMatrix::from_cells(
        configs.iter().map(|c| c.0.clone()).collect(),
        corpora.iter().map(|c| c.0.clone()).collect(),
        cells,
    )
}

/// Index of the smallest `key`, ties broken by the smaller config id.
fn argmin_by_id(m: &PerformanceMatrix, key: impl Fn(usize) -> f64) -> usize {
    (0..m.n_configs())
        .min_by(|&a, &b| key(a).total_cmp(&key(b)).then_with(|| m.config_ids[a].cmp(&m.config_ids[b])))
        .expect("matrix has configs")
}

/// Oracle that picks the best configuration for every corpus.
pub fn virtual_best(m: &PerformanceMatrix) -> (Vec<usize>, f64) {
    let choice: Vec<usize> = (0..m.n_corpora()).map(|j| argmin_by_id(m, |c| m.values[c][j])).collect();
    let avg = choice.iter().enumerate().map(|(j, &c)| m.values[c][j]).sum::<f64>() / m.n_corpora() as f64;
    (choice, avg)
}

/// Configuration with the lowest mean over all corpora.
pub fn single_best(m: &PerformanceMatrix) -> (usize, f64) {
    let c = argmin_by_id(m, |c| m.row_mean(c));
    (c, m.row_mean(c))
}
