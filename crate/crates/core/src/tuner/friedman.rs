use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::TuneError;

/// Ranks within one block, 1 = lowest value, ties share their average rank.
pub fn rank_block(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]].total_cmp(&values[order[i]]).is_eq() {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Candidate x block rank matrix from raw values (`values[c][b]`).
pub fn rank_matrix(values: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = values.len();
    let n = values.first().map_or(0, Vec::len);
    let mut ranks = vec![vec![0.0; n]; m];
    for b in 0..n {
        let column: Vec<f64> = values.iter().map(|row| row[b]).collect();
        for (c, r) in rank_block(&column).into_iter().enumerate() {
            ranks[c][b] = r;
        }
    }
    ranks
}

pub fn rank_sums(ranks: &[Vec<f64>]) -> Vec<f64> {
    ranks.iter().map(|row| row.iter().sum()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub p_value: f64,
    pub candidates: usize,
    pub blocks: usize,
}

/// Friedman rank statistic over a candidate x block rank matrix, with its
/// chi-squared (m - 1 degrees of freedom) upper-tail p-value.
pub fn friedman_test(ranks: &[Vec<f64>]) -> Result<FriedmanResult, TuneError> {
    let m = ranks.len();
    let n = ranks.first().map_or(0, Vec::len);
    if m < 2 || n < 2 || ranks.iter().any(|r| r.len() != n) {
        return Err(TuneError::InsufficientData { candidates: m, blocks: n });
    }
    let (mf, nf) = (m as f64, n as f64);
    let expected = nf * (mf + 1.0) / 2.0;
    let spread: f64 = rank_sums(ranks).iter().map(|r| (r - expected).powi(2)).sum();
    let statistic = 12.0 / (nf * mf * (mf + 1.0)) * spread;
    let chi2 = ChiSquared::new(mf - 1.0).expect("positive degrees of freedom");
    let p_value = if statistic <= 0.0 { 1.0 } else { chi2.sf(statistic) };
    Ok(FriedmanResult { statistic, p_value, candidates: m, blocks: n })
}

/// Two-sided rank-sum difference beyond which two candidates differ at
/// `significance`, normal approximation.
pub fn critical_difference(candidates: usize, blocks: usize, significance: f64) -> f64 {
    let z = Normal::standard().inverse_cdf(1.0 - significance / 2.0);
    let (m, n) = (candidates as f64, blocks as f64);
    z * (n * m * (m + 1.0) / 6.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(rank_block(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
        assert_eq!(rank_block(&[5.0, 5.0, 1.0, 5.0]), vec![3.0, 3.0, 1.0, 3.0]);
        assert_eq!(rank_block(&[f64::INFINITY, 2.0, f64::INFINITY]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn all_ties_give_zero_statistic() {
        let ranks = rank_matrix(&vec![vec![1.0; 6]; 4]);
        let r = friedman_test(&ranks).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn perfect_ranking_example() {
        let ranks = vec![vec![1.0; 4], vec![2.0; 4], vec![3.0; 4]];
        assert_eq!(rank_sums(&ranks), vec![4.0, 8.0, 12.0]);
        let r = friedman_test(&ranks).unwrap();
        assert_eq!(r.statistic, 8.0);
        // chi-squared with 2 df has survival exp(-x/2).
        assert!((r.p_value - (-4.0f64).exp()).abs() < 1e-12);
        assert!((r.p_value - 0.0183).abs() < 1e-3);
    }

    #[test]
    fn too_little_data() {
        assert!(friedman_test(&[vec![1.0, 1.0]]).is_err());
        assert!(friedman_test(&[vec![1.0], vec![2.0]]).is_err());
    }

    #[test]
    fn critical_difference_two_by_five() {
        let cd = critical_difference(2, 5, 0.05);
        assert!((cd - 1.959963984540054 * 5f64.sqrt()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn statistic_invariant_under_monotone_maps(
            values in prop::collection::vec(prop::collection::vec(0.1f64..100.0, 6), 3..6),
        ) {
            let base = friedman_test(&rank_matrix(&values)).unwrap();
            let mapped: Vec<Vec<f64>> = values.iter().map(|r| r.iter().map(|v| v.ln() * 3.0 + v.powi(3)).collect()).collect();
            let other = friedman_test(&rank_matrix(&mapped)).unwrap();
            prop_assert_eq!(base.statistic, other.statistic);
            prop_assert!(base.p_value >= 0.0 && base.p_value <= 1.0);
        }
    }
}
