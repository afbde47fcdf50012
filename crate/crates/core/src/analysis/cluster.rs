use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::seed::{self, stream};

const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after each Lloyd iteration of the kept restart.
    pub inertia_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Clustering {
    pub chosen_k: usize,
    pub labels: Vec<usize>,
    pub silhouette_by_k: Vec<(usize, f64)>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn distinct_points(points: &[Vec<f64>]) -> usize {
    let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
    sorted.sort_by(|a, b| a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    sorted.dedup();
    sorted.len()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    centroids.iter().enumerate().map(|(c, m)| (c, dist2(p, m))).fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn plus_plus<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).expect("enough distinct points");
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && u < d {
                pick = i;
                break;
            }
            u -= d;
        }
        centroids.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> KMeansResult {
    let dim = points[0].len();
    let mut labels = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut changed = false;
        let mut inertia = 0.0;
        for (l, p) in labels.iter_mut().zip(points) {
            let (c, d) = nearest(p, &centroids);
            inertia += d;
            if *l != c {
                *l = c;
                changed = true;
            }
        }
        history.push(inertia);
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (&l, p) in labels.iter().zip(points) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        for (c, (s, &n)) in sums.into_iter().zip(&counts).enumerate() {
            // an emptied cluster keeps its previous centroid
            if n > 0 {
                centroids[c] = s.into_iter().map(|v| v / n as f64).collect();
            }
        }
    }
    let inertia = *history.last().expect("at least one iteration");
    KMeansResult { labels, centroids, inertia, inertia_history: history }
}

/// k-means with k-means++ seeding; the restart with the lowest inertia is kept.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Result<KMeansResult, AnalysisError> {
    if points.is_empty() || points.iter().any(|p| p.len() != points[0].len() || p.iter().any(|v| !v.is_finite())) {
        return Err(AnalysisError::InvalidInput("points must be finite with a common dimension".into()));
    }
    let distinct = distinct_points(points);
    if k == 0 || k > distinct {
        return Err(AnalysisError::DegeneratePoints { distinct, needed: k.max(1) });
    }
    let best = (0..restarts.max(1) as u64)
        .map(|r| {
            let mut rng = seed::rng_for(seed, &[stream::RESTART, k as u64, r]);
            lloyd(points, plus_plus(points, k, &mut rng))
        })
        .reduce(|best, cur| if cur.inertia < best.inertia { cur } else { best })
        .expect("at least one restart");
    Ok(best)
}

/// Mean silhouette with Euclidean distance; points alone in their cluster score 0.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    let s: f64 = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if sizes[labels[i]] <= 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, q) in points.iter().enumerate() {
                if i != j {
                    sums[labels[j]] += dist2(p, q).sqrt();
                }
            }
            let a = sums[labels[i]] / (sizes[labels[i]] - 1) as f64;
            let b = (0..k).filter(|&c| c != labels[i] && sizes[c] > 0).map(|c| sums[c] / sizes[c] as f64).fold(f64::INFINITY, f64::min);
            if !b.is_finite() || a.max(b) == 0.0 {
                0.0
            } else {
                (b - a) / a.max(b)
            }
        })
        .sum();
    s / points.len() as f64
}

/// Runs k-means for every k in `k_min..=k_max` (capped at the number of
/// distinct points) and keeps the k with the highest mean silhouette,
/// preferring the smaller k on ties.
pub fn kmeans_silhouette(
    points: &[Vec<f64>],
    k_min: usize,
    k_max: usize,
    restarts: usize,
    seed: u64,
) -> Result<Clustering, AnalysisError> {
    let distinct = distinct_points(points);
    let k_min = k_min.max(1);
    if distinct < k_min {
        return Err(AnalysisError::DegeneratePoints { distinct, needed: k_min });
    }
    let ks: Vec<usize> = (k_min..=k_max.min(distinct)).collect();
    let runs = ks
        .par_iter()
        .map(|&k| kmeans(points, k, restarts, seed).map(|r| (k, silhouette(points, &r.labels), r.labels)))
        .collect::<Result<Vec<_>, _>>()?;
    let best = runs.iter().fold(&runs[0], |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok(Clustering {
        chosen_k: best.0,
        labels: best.2.clone(),
        silhouette_by_k: runs.iter().map(|(k, s, _)| (*k, *s)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn blobs(per: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seed::rng(seed);
        let n = Normal::new(0.0, 1.0).unwrap();
        let centres = [[0.0, 0.0], [12.0, 0.0], [6.0, 11.0]];
        centres
            .iter()
            .flat_map(|c| (0..per).map(|_| vec![c[0] + n.sample(&mut rng), c[1] + n.sample(&mut rng)]).collect::<Vec<_>>())
            .collect()
    }

    #[test]
    fn three_blobs_give_three_clusters() {
        let hits = (0..10).filter(|&s| kmeans_silhouette(&blobs(15, s), 2, 12, 10, s).unwrap().chosen_k == 3).count();
        assert!(hits >= 9, "{hits}");
    }

    #[test]
    fn inertia_never_increases() {
        let pts = blobs(20, 1);
        for k in 2..6 {
            let r = kmeans(&pts, k, 3, 1).unwrap();
            assert!(r.inertia_history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
            assert!(r.labels.iter().all(|&l| l < k));
        }
    }

    #[test]
    fn two_points_are_singletons() {
        let c = kmeans_silhouette(&[vec![0.0, 0.0], vec![1.0, 1.0]], 2, 12, 10, 0).unwrap();
        assert_eq!(c.chosen_k, 2);
        assert_ne!(c.labels[0], c.labels[1]);
        assert_eq!(c.silhouette_by_k, vec![(2, 0.0)]);
        let dup = kmeans_silhouette(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]], 2, 12, 10, 0);
        assert!(matches!(dup, Err(AnalysisError::DegeneratePoints { distinct: 1, .. })));
    }

    #[test]
    fn scaling_preserves_clustering() {
        let pts = blobs(10, 3);
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| v * 5.0).collect()).collect();
        let (a, b) = (kmeans_silhouette(&pts, 2, 12, 10, 3).unwrap(), kmeans_silhouette(&scaled, 2, 12, 10, 3).unwrap());
        assert_eq!(a.chosen_k, b.chosen_k);
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn silhouette_in_range() {
        let pts = blobs(8, 5);
        for k in 2..8 {
            let s = silhouette(&pts, &kmeans(&pts, k, 2, 0).unwrap().labels);
            assert!((-1.0..=1.0).contains(&s));
        }
    }
}
