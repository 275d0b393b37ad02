use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{canonical_labels, distinct_rows, row_major, sq_dist, Algorithm, ClusteringResult, Diagnostics};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApConfig {
    pub damping: f64,
    pub max_iter: usize,
    /// Iterations the exemplar set must stay fixed to count as converged.
    pub convergence_iter: usize,
    /// Self-similarity; the median pairwise similarity when unset.
    pub preference: Option<f64>,
}

impl Default for ApConfig {
    fn default() -> Self {
        ApConfig {
            damping: 0.9,
            max_iter: 1000,
            convergence_iter: 50,
            preference: None,
        }
    }
}

impl ApConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..1.0).contains(&self.damping) {
            return Err(Error::InvalidParameter(format!(
                "damping must lie in [0.5, 1), got {}",
                self.damping
            )));
        }
        if self.max_iter == 0 || self.convergence_iter == 0 {
            return Err(Error::InvalidParameter("AP iteration limits must be positive".into()));
        }
        if let Some(p) = self.preference {
            if !p.is_finite() {
                return Err(Error::InvalidParameter("AP preference must be finite".into()));
            }
        }
        Ok(())
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

/// Affinity propagation on negative squared Euclidean similarity.
///
/// Exemplars are points whose self-responsibility plus self-availability is
/// positive; every other point joins its most similar exemplar. If the
/// messages never produce an exemplar the point with the largest evidence is
/// used and the result is marked unconverged.
pub fn affinity_propagation(points: &DMatrix<f64>, cfg: &ApConfig) -> Result<ClusteringResult> {
    cfg.validate()?;
    let n = points.nrows();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let dim = points.ncols();
    let data = row_major(points);
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut s = vec![0.0; n * n];
    let mut off = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let v = -sq_dist(row(i), row(j));
            s[i * n + j] = v;
            s[j * n + i] = v;
            off.push(v);
        }
    }
    let preference = cfg.preference.unwrap_or_else(|| median(off.clone()));
    for i in 0..n {
        s[i * n + i] = preference;
    }

    let finish = |exemplars: Vec<usize>, iterations: usize, converged: bool| {
        build_result(&s, n, dim, &data, exemplars, iterations, converged, preference)
    };
    if distinct_rows(&data, dim).len() == 1 {
        return Ok(finish(vec![0], 0, true));
    }
    if off.iter().all(|&v| v == preference) {
        return Ok(finish((0..n).collect(), 0, true));
    }

    let lambda = cfg.damping;
    let mut r = vec![0.0; n * n];
    let mut a = vec![0.0; n * n];
    let mut last: Vec<usize> = Vec::new();
    let mut stable = 0;
    let mut converged = false;
    let mut iterations = 0;
    let mut col = vec![0.0; n];
    while iterations < cfg.max_iter {
        iterations += 1;
        for i in 0..n {
            let (mut first, mut second, mut arg) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0);
            for k in 0..n {
                let v = a[i * n + k] + s[i * n + k];
                if v > first {
                    second = first;
                    first = v;
                    arg = k;
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..n {
                let other = if k == arg { second } else { first };
                let new = s[i * n + k] - other;
                r[i * n + k] = lambda * r[i * n + k] + (1.0 - lambda) * new;
            }
        }
        col.iter_mut().for_each(|c| *c = 0.0);
        for i in 0..n {
            for k in 0..n {
                let v = r[i * n + k];
                col[k] += if i == k { v } else { v.max(0.0) };
            }
        }
        for i in 0..n {
            for k in 0..n {
                let rp = if i == k { r[i * n + k] } else { r[i * n + k].max(0.0) };
                let mut new = col[k] - rp;
                if i != k {
                    new = new.min(0.0);
                }
                a[i * n + k] = lambda * a[i * n + k] + (1.0 - lambda) * new;
            }
        }
        let exemplars: Vec<usize> = (0..n).filter(|&k| r[k * n + k] + a[k * n + k] > 0.0).collect();
        if exemplars == last {
            stable += 1;
        } else {
            stable = 1;
            last = exemplars;
        }
        if stable >= cfg.convergence_iter && !last.is_empty() {
            converged = true;
            break;
        }
    }
    if last.is_empty() {
        let best = (0..n)
            .max_by(|&x, &y| {
                (r[x * n + x] + a[x * n + x])
                    .total_cmp(&(r[y * n + y] + a[y * n + y]))
                    .then(y.cmp(&x))
            })
            .unwrap();
        return Ok(finish(vec![best], iterations, false));
    }
    Ok(finish(last, iterations, converged))
}

/// Affinity propagation that yields at most `k_max` clusters.
///
/// Runs with the configured preference first. If that produces too many
/// exemplars, the preference is bisected between twice the smallest
/// similarity and its starting value, and the largest preference giving at
/// most `k_max` clusters is kept.
pub fn affinity_propagation_capped(points: &DMatrix<f64>, cfg: &ApConfig, k_max: usize) -> Result<ClusteringResult> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    let first = affinity_propagation(points, cfg)?;
    if first.k <= k_max {
        return Ok(first);
    }
    let hi_start = match first.diagnostics {
        Diagnostics::AffinityPropagation { preference, .. } => preference,
        _ => unreachable!(),
    };
    let data = row_major(points);
    let dim = points.ncols();
    let n = points.nrows();
    let mut min_sim = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            min_sim = min_sim.min(-sq_dist(&data[i * dim..(i + 1) * dim], &data[j * dim..(j + 1) * dim]));
        }
    }
    let run = |p: f64| {
        affinity_propagation(
            points,
            &ApConfig {
                preference: Some(p),
                ..*cfg
            },
        )
    };
    let (mut lo, mut hi) = (2.0 * min_sim, hi_start);
    let mut best = run(lo)?;
    if best.k > k_max {
        return Ok(best);
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        let r = run(mid)?;
        if r.k <= k_max {
            lo = mid;
            best = r;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
fn build_result(
    s: &[f64],
    n: usize,
    dim: usize,
    data: &[f64],
    exemplars: Vec<usize>,
    iterations: usize,
    converged: bool,
    preference: f64,
) -> ClusteringResult {
    // exemplars at identical coordinates would split a cluster of copies
    let mut unique: Vec<usize> = Vec::new();
    for &e in &exemplars {
        if !unique.iter().any(|&u| s[u * n + e] == 0.0 && u != e) {
            unique.push(e);
        }
    }
    let raw: Vec<usize> = (0..n)
        .map(|i| {
            if let Some(pos) = unique.iter().position(|&e| e == i) {
                return pos;
            }
            let mut best = (f64::NEG_INFINITY, 0);
            for (pos, &e) in unique.iter().enumerate() {
                let v = if i == e { 0.0 } else { s[i * n + e] };
                if v > best.0 {
                    best = (v, pos);
                }
            }
            best.1
        })
        .collect();
    let (assignments, old_of_new) = canonical_labels(&raw);
    let ex: Vec<usize> = old_of_new.iter().map(|&o| unique[o]).collect();
    let centers = ex.iter().map(|&e| data[e * dim..(e + 1) * dim].to_vec()).collect();
    ClusteringResult {
        algorithm: Algorithm::AffinityPropagation,
        k: ex.len(),
        assignments,
        centers,
        exemplars: Some(ex),
        diagnostics: Diagnostics::AffinityPropagation { iterations, preference },
        seed: 0,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_are_singletons() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        let r = affinity_propagation(&x, &ApConfig::default()).unwrap();
        assert_eq!(r.assignments, [0, 1]);
        assert_eq!(r.k, 2);
    }

    #[test]
    fn identical_points_one_cluster() {
        let x = DMatrix::from_element(5, 2, 0.4);
        let r = affinity_propagation(&x, &ApConfig::default()).unwrap();
        assert_eq!(r.k, 1);
        assert!(r.assignments.iter().all(|&c| c == 0));
    }

    #[test]
    fn three_blobs() {
        let mut v = Vec::new();
        for c in [0.0, 10.0, 20.0] {
            for j in 0..6 {
                v.extend([c + (j as f64) * 0.1, c - (j as f64) * 0.05]);
            }
        }
        let x = DMatrix::from_row_slice(18, 2, &v);
        let r = affinity_propagation(&x, &ApConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.k, 3, "{:?}", r.assignments);
        for (c, &e) in r.exemplars.as_ref().unwrap().iter().enumerate() {
            assert_eq!(r.assignments[e], c);
        }
    }

    #[test]
    fn capped_reduces_cluster_count() {
        let v: Vec<f64> = (0..16)
            .flat_map(|i| [((i / 4) * 10) as f64 + (i % 4) as f64 * 0.1, (i % 2) as f64 * 0.1])
            .collect();
        let x = DMatrix::from_row_slice(16, 2, &v);
        let free = affinity_propagation(&x, &ApConfig::default()).unwrap();
        assert_eq!(free.k, 4);
        let capped = affinity_propagation_capped(&x, &ApConfig::default(), 2).unwrap();
        assert!(capped.k <= 2 && capped.k >= 1);
        let same = affinity_propagation_capped(&x, &ApConfig::default(), 16).unwrap();
        assert_eq!(same, free);
    }

    #[test]
    fn rejects_bad_damping() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let cfg = ApConfig {
            damping: 1.0,
            ..Default::default()
        };
        assert!(affinity_propagation(&x, &cfg).is_err());
    }
}
