//! Descriptive analytics over corpus features: correlations with a Ward
//! ordering, a 2-D PCA projection, silhouette-selected k-means, and
//! per-corpus configuration hardness.

mod cluster;
mod corr;
mod output;
mod pca;

pub use cluster::{kmeans, kmeans_silhouette, silhouette, Clustering, KMeansResult};
pub use corr::{pearson_corr, ward_order, CorrelationMatrix};
pub use output::{scatter_svg, write_correlation_csv, write_projection_csv, ScatterPoint};
pub use pca::{pca2, pca2_unscaled, Projection2D};

use crate::portfolio::PerformanceMatrix;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("only {distinct} distinct points; need at least {needed}")]
    DegeneratePoints { distinct: usize, needed: usize },
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per corpus, the number of configurations within `tolerance` (relative)
/// of that corpus' best value.
pub fn config_hardness(matrix: &PerformanceMatrix, tolerance: f64) -> Vec<usize> {
    (0..matrix.n_corpora())
        .map(|j| {
            let best = (0..matrix.n_configs()).map(|c| matrix.value(c, j)).fold(f64::INFINITY, f64::min);
            (0..matrix.n_configs()).filter(|&c| matrix.value(c, j) <= (1.0 + tolerance) * best).count()
        })
        .collect()
}

fn check_rows(rows: &[Vec<f64>], needed: usize) -> Result<usize, AnalysisError> {
    if rows.len() < needed {
        return Err(AnalysisError::TooFewRows { needed, got: rows.len() });
    }
    let p = rows[0].len();
    if p == 0 || rows.iter().any(|r| r.len() != p) {
        return Err(AnalysisError::InvalidInput("rows must share a non-zero width".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(AnalysisError::InvalidInput("values must be finite".into()));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(values: Vec<Vec<f64>>) -> PerformanceMatrix {
        let n = values[0].len();
        PerformanceMatrix::from_cells(
            (0..values.len()).map(|i| format!("c{i}")).collect(),
            (0..n).map(|i| format!("x{i}")).collect(),
            values.into_iter().map(|r| r.into_iter().map(Some).collect()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn hardness_examples() {
        assert_eq!(config_hardness(&matrix(vec![vec![100.0], vec![104.0], vec![120.0]]), 0.05), vec![2]);
        assert_eq!(config_hardness(&matrix(vec![vec![7.0, 1.0], vec![7.0, 1.0]]), 0.05), vec![2, 2]);
    }

    proptest! {
        #[test]
        fn hardness_matches_recount(values in prop::collection::vec(prop::collection::vec(50.0f64..300.0, 6), 4)) {
            let m = matrix(values.clone());
            let h = config_hardness(&m, 0.05);
            for j in 0..6 {
                let mut col: Vec<f64> = values.iter().map(|r| r[j]).collect();
                col.sort_by(f64::total_cmp);
                let brute = col.iter().filter(|&&v| v <= col[0] * 1.05).count();
                prop_assert_eq!(h[j], brute);
            }
        }
    }
}
