use serde::{Deserialize, Serialize};

use super::{check_rows, AnalysisError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Columns without variance; their off-diagonal correlations are 0.
    pub zero_variance: Vec<bool>,
}

/// Pearson correlation between the columns of `rows`.
pub fn pearson_corr(names: &[String], rows: &[Vec<f64>]) -> Result<CorrelationMatrix, AnalysisError> {
    let p = check_rows(rows, 2)?;
    if names.len() != p {
        return Err(AnalysisError::InvalidInput(format!("{} names for {p} columns", names.len())));
    }
    let n = rows.len() as f64;
    let means: Vec<f64> = (0..p).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n).collect();
    let centred: Vec<Vec<f64>> = (0..p).map(|c| rows.iter().map(|r| r[c] - means[c]).collect()).collect();
    let ss: Vec<f64> = centred.iter().map(|col| col.iter().map(|v| v * v).sum()).collect();
    let zero_variance: Vec<bool> = ss.iter().map(|&s| s == 0.0).collect();
    let mut values = vec![vec![0.0; p]; p];
    for i in 0..p {
        values[i][i] = 1.0;
        for j in i + 1..p {
            let r = if zero_variance[i] || zero_variance[j] {
                0.0
            } else {
                let cross: f64 = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum();
                (cross / (ss[i].sqrt() * ss[j].sqrt())).clamp(-1.0, 1.0)
            };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix { names: names.to_vec(), values, zero_variance })
}

/// Leaf order of a Ward dendrogram over `1 - |corr|`.
///
/// Distances are updated with the Lance-Williams recurrence. The closest
/// pair merges first, ties going to the lowest `(i, j)` cluster ids. Leaves
/// get ids `0..n`, merges `n..`, and each merge lists its lower-id child first.
pub fn ward_order(corr: &CorrelationMatrix) -> Vec<usize> {
    let n = corr.values.len();
    if n == 0 {
        return Vec::new();
    }
    let total = 2 * n - 1;
    let mut dist = vec![vec![0.0; total]; total];
    for i in 0..n {
        for j in 0..n {
            dist[i][j] = 1.0 - corr.values[i][j].abs();
        }
    }
    let mut size = vec![1usize; total];
    let mut active: Vec<usize> = (0..n).collect();
    let mut children: Vec<(usize, usize)> = Vec::with_capacity(n - 1);
    while active.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                if dist[i][j] < best.0 {
                    best = (dist[i][j], i, j);
                }
            }
        }
        let (_, i, j) = best;
        let new = n + children.len();
        children.push((i.min(j), i.max(j)));
        size[new] = size[i] + size[j];
        for &k in &active {
            if k == i || k == j {
                continue;
            }
            let (ni, nj, nk) = (size[i] as f64, size[j] as f64, size[k] as f64);
            let d = ((ni + nk) * dist[k][i] + (nj + nk) * dist[k][j] - nk * dist[i][j]) / (ni + nj + nk);
            dist[k][new] = d;
            dist[new][k] = d;
        }
        active.retain(|&k| k != i && k != j);
        active.push(new);
    }
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![active[0]];
    while let Some(c) = stack.pop() {
        if c < n {
            order.push(c);
        } else {
            let (l, r) = children[c - n];
            stack.push(r);
            stack.push(l);
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("f{i}")).collect()
    }

    fn rows_of(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..cols[0].len()).map(|r| cols.iter().map(|c| c[r]).collect()).collect()
    }

    #[test]
    fn trivial_correlations() {
        let x = vec![1.0, 4.0, 2.0, 8.0, 5.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let aff: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let c = pearson_corr(&names(4), &rows_of(&[x.clone(), neg, aff, vec![3.0; 5]])).unwrap();
        assert_eq!(c.values[0][0], 1.0);
        assert!((c.values[0][1] + 1.0).abs() < 1e-12);
        assert!((c.values[0][2] - 1.0).abs() < 1e-12);
        assert_eq!(c.values[0][3], 0.0);
        assert_eq!(c.values[3][3], 1.0);
        assert_eq!(c.zero_variance, vec![false, false, false, true]);
        assert!(pearson_corr(&names(1), &[vec![1.0]]).is_err());
    }

    #[test]
    fn correlated_pair_is_adjacent() {
        let mut rng = seed::rng(4);
        let mut cols: Vec<Vec<f64>> = (0..8).map(|_| (0..40).map(|_| rng.random::<f64>()).collect()).collect();
        cols[5] = cols[2].iter().map(|v| 3.0 * v - 1.0).collect();
        let c = pearson_corr(&names(8), &rows_of(&cols)).unwrap();
        let order = ward_order(&c);
        let (a, b) = (order.iter().position(|&x| x == 2).unwrap(), order.iter().position(|&x| x == 5).unwrap());
        assert_eq!(a.abs_diff(b), 1);
    }

    #[test]
    fn uncorrelated_feature_sits_at_an_end() {
        let c = CorrelationMatrix {
            names: names(3),
            values: vec![vec![1.0, 0.99, 0.01], vec![0.99, 1.0, 0.02], vec![0.01, 0.02, 1.0]],
            zero_variance: vec![false; 3],
        };
        let order = ward_order(&c);
        assert!(order[0] == 2 || order[2] == 2);
        assert_eq!(order, vec![2, 0, 1]);
    }

    #[test]
    fn identity_order_is_deterministic() {
        let p = 6;
        let values = (0..p).map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let c = CorrelationMatrix { names: names(p), values, zero_variance: vec![false; p] };
        let a = ward_order(&c);
        assert_eq!(a, ward_order(&c));
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, (0..p).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn symmetric_unit_diagonal_permutation(data in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 24), 3..12)) {
            let c = pearson_corr(&names(24), &data).unwrap();
            for i in 0..24 {
                prop_assert_eq!(c.values[i][i], 1.0);
                for j in 0..24 {
                    prop_assert_eq!(c.values[i][j], c.values[j][i]);
                    prop_assert!((-1.0..=1.0).contains(&c.values[i][j]));
                }
            }
            let mut order = ward_order(&c);
            order.sort();
            prop_assert_eq!(order, (0..24).collect::<Vec<_>>());
        }
    }
}
