//! Choosing the number of clusters and scoring partitions.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{centroids, distinct_rows, kmeans, row_major, sq_dist, ward_dendrogram};
use crate::error::{Error, Result};
use crate::rng::stream;

/// Clusterer used inside the gap statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapClusterer {
    KMeans { restarts: usize },
    Hierarchical,
}

/// Scaling of the reference standard deviation into the tolerance `s_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapSdRule {
    /// `sd * sqrt(1 + 1/B)`.
    #[default]
    Standard,
    /// `sd * sqrt(2/B)`.
    Printed,
}

impl GapSdRule {
    fn factor(self, b: usize) -> f64 {
        let b = b as f64;
        match self {
            GapSdRule::Standard => (1.0 + 1.0 / b).sqrt(),
            GapSdRule::Printed => (2.0 / b).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub k: usize,
    pub log_wk: f64,
    pub expected_log_wk: f64,
    pub gap: f64,
    pub s_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub records: Vec<GapRecord>,
    pub chosen_k: usize,
    pub b: usize,
    pub sd_rule: GapSdRule,
    /// Set when every point coincides; `records` is then empty.
    pub degenerate: bool,
}

/// Smallest dispersion used before taking logs, so a partition into
/// coincident points stays finite.
const MIN_DISPERSION: f64 = 1e-300;

/// Within-cluster sum of squared distances to the cluster means.
pub fn within_dispersion(points: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let dim = points.ncols();
    let data = row_major(points);
    dispersion(&data, dim, labels)
}

fn dispersion(data: &[f64], dim: usize, labels: &[usize]) -> f64 {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let centers = centroids(data, dim, labels, k);
    labels
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(&data[i * dim..(i + 1) * dim], &centers[c]))
        .sum()
}

/// `log W_k` for `k = 1..=k_max`.
fn log_dispersions(points: &DMatrix<f64>, k_max: usize, seed: u64, clusterer: GapClusterer) -> Result<Vec<f64>> {
    let dim = points.ncols();
    let data = row_major(points);
    let log = |labels: &[usize]| dispersion(&data, dim, labels).max(MIN_DISPERSION).ln();
    match clusterer {
        GapClusterer::Hierarchical => {
            let d = ward_dendrogram(points);
            Ok((1..=k_max).map(|k| log(&d.cut(k))).collect())
        }
        GapClusterer::KMeans { restarts } => (1..=k_max)
            .map(|k| Ok(log(&kmeans(points, k, seed.wrapping_add(k as u64), restarts)?.assignments)))
            .collect(),
    }
}

/// Offset separating reference-set streams from clustering streams.
const REFERENCE_STREAM: u64 = 1 << 32;

/// Gap statistic with references drawn uniformly over the bounding box of
/// the data.
///
/// `k_max` is capped at the number of distinct points. The chosen `k` is the
/// smallest with `Gap(k) >= Gap(k+1) - s_{k+1}`, or `k_max` if none.
pub fn gap_statistic(
    points: &DMatrix<f64>,
    k_max: usize,
    b: usize,
    seed: u64,
    clusterer: GapClusterer,
) -> Result<GapReport> {
    gap_statistic_with(points, k_max, b, seed, clusterer, GapSdRule::Standard)
}

pub fn gap_statistic_with(
    points: &DMatrix<f64>,
    k_max: usize,
    b: usize,
    seed: u64,
    clusterer: GapClusterer,
    sd_rule: GapSdRule,
) -> Result<GapReport> {
    if k_max < 2 {
        return Err(Error::InvalidParameter(format!("k_max must be at least 2, got {k_max}")));
    }
    if b < 10 {
        return Err(Error::InvalidParameter(format!("B must be at least 10, got {b}")));
    }
    let (n, dim) = points.shape();
    if n == 0 {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let data = row_major(points);
    let distinct = distinct_rows(&data, dim).len();
    if distinct <= 1 {
        return Ok(GapReport {
            records: Vec::new(),
            chosen_k: 1,
            b,
            sd_rule,
            degenerate: true,
        });
    }
    let k_max = k_max.min(distinct);
    let lo: Vec<f64> = (0..dim).map(|c| points.column(c).min()).collect();
    let hi: Vec<f64> = (0..dim).map(|c| points.column(c).max()).collect();

    let observed = log_dispersions(points, k_max, seed, clusterer)?;
    let reference: Vec<Vec<f64>> = (0..b as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, REFERENCE_STREAM + r);
            let sample = DMatrix::from_fn(n, dim, |_, c| {
                if hi[c] > lo[c] {
                    rng.random_range(lo[c]..hi[c])
                } else {
                    lo[c]
                }
            });
            log_dispersions(&sample, k_max, seed.wrapping_add(r + 1) ^ REFERENCE_STREAM, clusterer)
        })
        .collect::<Result<_>>()?;

    let factor = sd_rule.factor(b);
    let records: Vec<GapRecord> = (0..k_max)
        .map(|i| {
            let vals: Vec<f64> = reference.iter().map(|r| r[i]).collect();
            let mean = vals.iter().sum::<f64>() / b as f64;
            let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / b as f64).sqrt();
            GapRecord {
                k: i + 1,
                log_wk: observed[i],
                expected_log_wk: mean,
                gap: mean - observed[i],
                s_k: sd * factor,
            }
        })
        .collect();
    let chosen_k = records
        .windows(2)
        .find(|w| w[0].gap >= w[1].gap - w[1].s_k)
        .map_or(k_max, |w| w[0].k);
    Ok(GapReport {
        records,
        chosen_k,
        b,
        sd_rule,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KneeReport {
    pub metric_curve: Vec<(usize, f64)>,
    pub chosen_k: usize,
    pub fit_rmse_left: f64,
    pub fit_rmse_right: f64,
    /// Length-weighted sum of the two fit errors at the chosen split.
    pub total_rmse: f64,
}

/// Least-squares line fit error (root mean square residual).
fn line_rmse(pts: &[(usize, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 as f64 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 as f64 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 as f64 - mx)).powi(2))
        .sum();
    (sse / n).sqrt()
}

/// Knee of a `k`-versus-metric curve by two-segment line fitting.
///
/// Each split `c` fits one line to the points with `k <= c` and another to
/// the rest (at least two points each). The split with the smallest
/// length-weighted RMSE wins; near-ties go to the smaller `k`.
pub fn l_method(metric_curve: &[(usize, f64)]) -> Result<KneeReport> {
    let n = metric_curve.len();
    if n < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: n });
    }
    let mut curve = metric_curve.to_vec();
    curve.sort_by_key(|p| p.0);
    let (ymin, ymax) = curve
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let tol = 1e-9 * (ymax - ymin).abs();
    let mut best: Option<(f64, usize, f64, f64)> = None;
    for c in 1..=n - 3 {
        let left = line_rmse(&curve[..=c]);
        let right = line_rmse(&curve[c + 1..]);
        let total = ((c + 1) as f64 * left + (n - c - 1) as f64 * right) / n as f64;
        if best.is_none_or(|b| total < b.0 - tol) {
            best = Some((total, c, left, right));
        }
    }
    let (total, c, left, right) = best.unwrap();
    Ok(KneeReport {
        metric_curve: curve.clone(),
        chosen_k: curve[c].0,
        fit_rmse_left: left,
        fit_rmse_right: right,
        total_rmse: total,
    })
}

/// Metric plotted against `k` for the L-method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KneeMetric {
    /// Ward height of the merge that takes `k` clusters to `k - 1`.
    #[default]
    MergeDistance,
    /// Within-cluster dispersion of the Ward cut at `k`.
    Dispersion,
}

/// Curve over `k = 2..=k_max` from one Ward dendrogram of `points`.
pub fn knee_curve(points: &DMatrix<f64>, k_max: usize, metric: KneeMetric) -> Result<Vec<(usize, f64)>> {
    let n = points.nrows();
    let k_max = k_max.min(n);
    if k_max < 5 {
        return Err(Error::TooFewPoints { needed: 5, got: k_max });
    }
    let d = ward_dendrogram(points);
    Ok((2..=k_max)
        .map(|k| {
            let v = match metric {
                KneeMetric::MergeDistance => d.merge_height_at(k - 1).unwrap_or(0.0),
                KneeMetric::Dispersion => within_dispersion(points, &d.cut(k)),
            };
            (k, v)
        })
        .collect())
}

/// Mean silhouette width. Points in singleton clusters score 0.
pub fn silhouette(points: &DMatrix<f64>, assignments: &[usize]) -> Result<f64> {
    Ok(silhouette_samples(points, assignments)?.iter().sum::<f64>() / assignments.len() as f64)
}

pub fn silhouette_samples(points: &DMatrix<f64>, assignments: &[usize]) -> Result<Vec<f64>> {
    let n = points.nrows();
    if assignments.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{} assignments for {n} points",
            assignments.len()
        )));
    }
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(Error::SingleCluster);
    }
    let mut sizes = vec![0usize; k];
    for &c in assignments {
        sizes[c] += 1;
    }
    if sizes.contains(&0) {
        return Err(Error::EmptyCluster);
    }
    let dim = points.ncols();
    let data = row_major(points);
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let own = assignments[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for j in 0..n {
                if j != i {
                    sums[assignments[j]] += sq_dist(row(i), row(j)).sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .collect())
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let c2 = |x: u64| (x * x.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().flatten().map(|&v| c2(v)).sum();
    let rows: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(n as u64);
    if total == 0.0 {
        return 1.0;
    }
    let expected = rows * cols / total;
    let max = (rows + cols) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
