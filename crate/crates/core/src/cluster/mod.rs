//! Dimensionality reduction and the three clustering algorithms.
//!
//! Every algorithm takes points as rows of a matrix and returns a
//! [`ClusteringResult`] whose labels are dense `0..k` and numbered by first
//! appearance in row order, so results are comparable across algorithms and
//! runs.

mod affinity;
mod hierarchical;
mod kmeans;
mod pca;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use affinity::{affinity_propagation, affinity_propagation_capped, ApConfig};
pub use hierarchical::{cut_result, hierarchical, ward_dendrogram, Dendrogram, Merge};
pub use kmeans::{kmeans, kmeans_with, KMeansConfig};
pub use pca::{pca_reduce, ReducedMatrix};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "kmeans")]
    KMeans,
    #[serde(rename = "hierarchical")]
    Hierarchical,
    #[serde(rename = "ap")]
    AffinityPropagation,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::KMeans,
        Algorithm::Hierarchical,
        Algorithm::AffinityPropagation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::KMeans => "kmeans",
            Algorithm::Hierarchical => "hierarchical",
            Algorithm::AffinityPropagation => "ap",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown clustering algorithm `{s}`")))
    }
}

/// Algorithm-specific run details.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostics {
    KMeans {
        inertia: f64,
        iterations: usize,
        /// Inertia after every update step of the winning restart.
        inertia_history: Vec<f64>,
        restarts: usize,
    },
    Hierarchical {
        /// Height of the last merge applied at this cut (0 when none).
        cut_height: f64,
        /// Heights of all `n - 1` merges, nondecreasing.
        merge_heights: Vec<f64>,
    },
    AffinityPropagation {
        iterations: usize,
        preference: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub algorithm: Algorithm,
    /// Cluster index of every input row.
    pub assignments: Vec<usize>,
    pub k: usize,
    /// Centroids (k-means, hierarchical) or exemplar points (AP), one row per
    /// cluster.
    pub centers: Vec<Vec<f64>>,
    /// Row index of each cluster's exemplar (AP only).
    pub exemplars: Option<Vec<usize>>,
    pub diagnostics: Diagnostics,
    pub seed: u64,
    pub converged: bool,
}

impl ClusteringResult {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }

    /// Row indices of every cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &c) in self.assignments.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    /// Index of the nearest center to `x` (ties to the lower index).
    pub fn nearest_center(&self, x: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (c, center) in self.centers.iter().enumerate() {
            let d = sq_dist(x, center);
            if d < best.0 {
                best = (d, c);
            }
        }
        best.1
    }
}

/// Row-major copy of a matrix.
pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (n, d) = m.shape();
    let mut out = Vec::with_capacity(n * d);
    for r in 0..n {
        for c in 0..d {
            out.push(m[(r, c)]);
        }
    }
    out
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Relabels so clusters are numbered by first appearance. Returns the new
/// labels and, for every new label, the old label it came from.
pub(crate) fn canonical_labels(labels: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut map = std::collections::HashMap::new();
    let mut old_of_new = Vec::new();
    let relabeled = labels
        .iter()
        .map(|&l| {
            *map.entry(l).or_insert_with(|| {
                old_of_new.push(l);
                old_of_new.len() - 1
            })
        })
        .collect();
    (relabeled, old_of_new)
}

/// Mean of the rows in every cluster.
pub(crate) fn centroids(data: &[f64], dim: usize, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (i, &c) in labels.iter().enumerate() {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(&data[i * dim..(i + 1) * dim]) {
            *s += x;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            for v in s.iter_mut() {
                *v /= n as f64;
            }
        }
    }
    sums
}

/// Number of distinct rows (bitwise comparison).
pub(crate) fn distinct_rows(data: &[f64], dim: usize) -> Vec<usize> {
    let n = data.len().checked_div(dim).unwrap_or(0);
    let mut seen = std::collections::HashSet::new();
    let mut reps = Vec::new();
    for i in 0..n {
        let key: Vec<u64> = data[i * dim..(i + 1) * dim]
            .iter()
            .map(|v| if *v == 0.0 { 0 } else { v.to_bits() })
            .collect();
        if seen.insert(key) {
            reps.push(i);
        }
    }
    reps
}
