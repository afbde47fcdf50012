use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{check_rows, AnalysisError};
use crate::stats::sample_stdev;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Projection2D {
    pub coords: Vec<[f64; 2]>,
    /// Share of total variance carried by each component.
    pub explained: [f64; 2],
    pub eigenvalues: [f64; 2],
    pub loadings: [Vec<f64>; 2],
    pub means: Vec<f64>,
    /// Scale divided out per column; 1 for unscaled PCA, 0 for constant columns.
    pub scales: Vec<f64>,
}

/// Standard-scaled PCA onto two components. Constant columns scale to zero.
pub fn pca2(rows: &[Vec<f64>]) -> Result<Projection2D, AnalysisError> {
    project(rows, true)
}

/// PCA on centred but unscaled columns.
pub fn pca2_unscaled(rows: &[Vec<f64>]) -> Result<Projection2D, AnalysisError> {
    project(rows, false)
}

fn project(rows: &[Vec<f64>], scale: bool) -> Result<Projection2D, AnalysisError> {
    let p = check_rows(rows, 3)?;
    let n = rows.len();
    let means: Vec<f64> = (0..p).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n as f64).collect();
    let scales: Vec<f64> = (0..p)
        .map(|c| if scale { sample_stdev(&rows.iter().map(|r| r[c]).collect::<Vec<_>>()) } else { 1.0 })
        .collect();
    let z = DMatrix::from_fn(n, p, |i, c| {
        if scales[c] > 0.0 {
            (rows[i][c] - means[c]) / scales[c]
        } else {
            0.0
        }
    });
    let cov = (z.transpose() * &z) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();

    let component = |rank: usize| -> (f64, Vec<f64>) {
        let Some(&idx) = order.get(rank) else { return (0.0, vec![0.0; p]) };
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let lead = (0..p).fold(0, |best, i| if v[i].abs() > v[best].abs() { i } else { best });
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        (eig.eigenvalues[idx].max(0.0), v)
    };
    let (l1, v1) = component(0);
    let (l2, v2) = component(1);
    let coords = (0..n)
        .map(|i| {
            let row = z.row(i);
            [row.iter().zip(&v1).map(|(a, b)| a * b).sum(), row.iter().zip(&v2).map(|(a, b)| a * b).sum()]
        })
        .collect();
    let frac = |l: f64| if total > 0.0 { (l / total).clamp(0.0, 1.0) } else { 0.0 };
    Ok(Projection2D {
        coords,
        explained: [frac(l1), frac(l2)],
        eigenvalues: [l1, l2],
        loadings: [v1, v2],
        means,
        scales,
    })
}
