use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{canonical_labels, centroids, distinct_rows, row_major, sq_dist, Algorithm, ClusteringResult, Diagnostics};
use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 10,
            max_iter: 300,
        }
    }
}

struct Run {
    labels: Vec<usize>,
    centers: Vec<Vec<f64>>,
    inertia: f64,
    history: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Lloyd's algorithm from `k` randomly chosen distinct points, best of
/// `restarts` runs by within-cluster sum of squares.
///
/// Each restart draws from its own stream of the master `seed`, so results
/// do not depend on scheduling. A cluster that empties is re-seeded with the
/// point farthest from its centroid.
pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64, restarts: usize) -> Result<ClusteringResult> {
    kmeans_with(
        points,
        k,
        seed,
        &KMeansConfig {
            restarts,
            ..Default::default()
        },
    )
}

pub fn kmeans_with(points: &DMatrix<f64>, k: usize, seed: u64, cfg: &KMeansConfig) -> Result<ClusteringResult> {
    if cfg.restarts == 0 {
        return Err(Error::InvalidParameter("k-means needs at least one restart".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let dim = points.ncols();
    let data = row_major(points);
    let distinct = distinct_rows(&data, dim);
    if k > distinct.len() {
        return Err(Error::KTooLarge {
            k,
            available: distinct.len(),
        });
    }
    let runs: Vec<Run> = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r);
            lloyd(&data, dim, k, &distinct, cfg.max_iter, &mut rng)
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .unwrap();
    let (assignments, old_of_new) = canonical_labels(&best.labels);
    let centers = old_of_new.iter().map(|&o| best.centers[o].clone()).collect();
    Ok(ClusteringResult {
        algorithm: Algorithm::KMeans,
        assignments,
        k,
        centers,
        exemplars: None,
        diagnostics: Diagnostics::KMeans {
            inertia: best.inertia,
            iterations: best.iterations,
            inertia_history: best.history,
            restarts: cfg.restarts,
        },
        seed,
        converged: best.converged,
    })
}

fn nearest(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(x, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn lloyd(data: &[f64], dim: usize, k: usize, distinct: &[usize], max_iter: usize, rng: &mut impl Rng) -> Run {
    let n = data.len() / dim.max(1);
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut centers: Vec<Vec<f64>> = sample(rng, distinct.len(), k)
        .into_iter()
        .map(|i| row(distinct[i]).to_vec())
        .collect();
    let mut labels = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        let mut changed = 0;
        for i in 0..n {
            let (c, d) = nearest(row(i), &centers);
            if labels[i] != c {
                labels[i] = c;
                changed += 1;
            }
            dist[i] = d;
        }
        if changed == 0 {
            converged = true;
            break;
        }
        iterations += 1;
        reseed_empty(&mut labels, &mut dist, k);
        centers = centroids(data, dim, &labels, k);
        let inertia: f64 = (0..n).map(|i| sq_dist(row(i), &centers[labels[i]])).sum();
        if let Some(&prev) = history.last() {
            debug_assert!(inertia <= prev * (1.0 + 1e-12) + 1e-12, "inertia rose: {prev} -> {inertia}");
        }
        history.push(inertia);
    }
    let inertia = (0..n).map(|i| sq_dist(row(i), &centers[labels[i]])).sum();
    Run {
        labels,
        centers,
        inertia,
        history,
        iterations,
        converged,
    }
}

/// Moves the point farthest from its centroid (among clusters with more
/// than one member) into each empty cluster.
fn reseed_empty(labels: &mut [usize], dist: &mut [f64], k: usize) {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let far = (0..labels.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
        if let Some(i) = far {
            sizes[labels[i]] -= 1;
            labels[i] = c;
            sizes[c] = 1;
            dist[i] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn two_points_two_clusters() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        let r = kmeans(&x, 2, 1, 3).unwrap();
        assert_eq!(r.assignments, [0, 1]);
        match r.diagnostics {
            Diagnostics::KMeans { inertia, .. } => assert_eq!(inertia, 0.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 3.0, 0.0, 0.0, 6.0]);
        let r = kmeans(&x, 1, 9, 2).unwrap();
        assert_eq!(r.centers, vec![vec![1.0, 2.0]]);
    }

    #[test]
    fn too_many_clusters() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 2.0]);
        assert!(matches!(kmeans(&x, 3, 0, 1), Err(Error::KTooLarge { k: 3, available: 2 })));
        assert!(kmeans(&x, 2, 0, 0).is_err());
    }

    #[test]
    fn deterministic_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let x = DMatrix::from_fn(120, 3, |r, _| (r % 4) as f64 + noise.sample(&mut rng));
        let a = kmeans(&x, 4, 77, 5).unwrap();
        let b = kmeans(&x, 4, 77, 5).unwrap();
        assert_eq!(a, b);
        if let Diagnostics::KMeans { inertia_history, .. } = &a.diagnostics {
            assert!(inertia_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        }
        assert!(a.cluster_sizes().iter().all(|&s| s > 0));
    }
}
