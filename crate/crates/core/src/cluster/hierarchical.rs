use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{canonical_labels, centroids, distinct_rows, row_major, sq_dist, Algorithm, ClusteringResult, Diagnostics};
use crate::error::{Error, Result};

/// One agglomeration step. Leaves are numbered `0..n`; the cluster created
/// by merge `i` is numbered `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// Flat labels after applying the first `n - k` merges, numbered by
    /// first appearance.
    pub fn cut(&self, k: usize) -> Vec<usize> {
        assert!(k >= 1 && k <= self.n.max(1), "cut k={k} out of range for n={}", self.n);
        let mut parent: Vec<usize> = (0..self.n + self.merges.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, m) in self.merges.iter().take(self.n - k).enumerate() {
            let id = self.n + i;
            let ra = find(&mut parent, m.a);
            let rb = find(&mut parent, m.b);
            parent[ra] = id;
            parent[rb] = id;
        }
        let roots: Vec<usize> = (0..self.n).map(|i| find(&mut parent, i)).collect();
        canonical_labels(&roots).0
    }

    /// Height of the merge that takes the tree from `k + 1` to `k` clusters.
    pub fn merge_height_at(&self, k: usize) -> Option<f64> {
        if k == 0 || k >= self.n {
            return None;
        }
        self.merges.get(self.n - k - 1).map(|m| m.height)
    }
}

fn condensed(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    n * i - i * (i + 1) / 2 + (j - i - 1)
}

/// Ward agglomeration over Euclidean distances.
///
/// The closest pair is merged at every step; ties go to the pair with the
/// smallest slot indices. Heights are `sqrt` of the Ward criterion, which for
/// two single points is their Euclidean distance.
pub fn ward_dendrogram(points: &DMatrix<f64>) -> Dendrogram {
    let n = points.nrows();
    let dim = points.ncols();
    let data = row_major(points);
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    if n < 2 {
        return Dendrogram { n, merges: Vec::new() };
    }
    let mut d = vec![0.0f64; n * (n - 1) / 2];
    for i in 0..n {
        for j in i + 1..n {
            d[condensed(n, i, j)] = sq_dist(row(i), row(j));
        }
    }
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut id: Vec<usize> = (0..n).collect();
    let mut nn = vec![usize::MAX; n];
    let mut nnd = vec![f64::INFINITY; n];

    let rescan = |a: usize, d: &[f64], active: &[bool], nn: &mut [usize], nnd: &mut [f64]| {
        nn[a] = usize::MAX;
        nnd[a] = f64::INFINITY;
        for b in a + 1..n {
            if active[b] {
                let v = d[condensed(n, a, b)];
                if v < nnd[a] {
                    nnd[a] = v;
                    nn[a] = b;
                }
            }
        }
    };
    for a in 0..n {
        rescan(a, &d, &active, &mut nn, &mut nnd);
    }

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut i = usize::MAX;
        let mut best = f64::INFINITY;
        for a in 0..n {
            if active[a] && nn[a] != usize::MAX && nnd[a] < best {
                best = nnd[a];
                i = a;
            }
        }
        let j = nn[i];
        let dij = best;
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let nk = size[k] as f64;
            let dik = d[condensed(n, i.min(k), i.max(k))];
            let djk = d[condensed(n, j.min(k), j.max(k))];
            let v = ((ni + nk) * dik + (nj + nk) * djk - nk * dij) / (ni + nj + nk);
            d[condensed(n, i.min(k), i.max(k))] = v.max(0.0);
        }
        merges.push(Merge {
            a: id[i].min(id[j]),
            b: id[i].max(id[j]),
            height: dij.max(0.0).sqrt(),
            size: size[i] + size[j],
        });
        active[j] = false;
        size[i] += size[j];
        id[i] = n + step;
        nn[j] = usize::MAX;

        rescan(i, &d, &active, &mut nn, &mut nnd);
        for a in 0..n {
            if !active[a] || a == i {
                continue;
            }
            if a < i {
                if nn[a] == i || nn[a] == j {
                    rescan(a, &d, &active, &mut nn, &mut nnd);
                } else {
                    let v = d[condensed(n, a, i)];
                    if v < nnd[a] || (v == nnd[a] && i < nn[a]) {
                        nnd[a] = v;
                        nn[a] = i;
                    }
                }
            } else if a < j && nn[a] == j {
                rescan(a, &d, &active, &mut nn, &mut nnd);
            }
        }
    }
    Dendrogram { n, merges }
}

/// Ward clustering cut to `k` clusters.
pub fn hierarchical(points: &DMatrix<f64>, k: usize) -> Result<ClusteringResult> {
    let dendrogram = ward_dendrogram(points);
    cut_result(points, &dendrogram, k)
}

/// Builds a result from a precomputed dendrogram of `points`.
pub fn cut_result(points: &DMatrix<f64>, dendrogram: &Dendrogram, k: usize) -> Result<ClusteringResult> {
    let n = points.nrows();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let data = row_major(points);
    let available = distinct_rows(&data, points.ncols()).len();
    if k > available {
        return Err(Error::KTooLarge { k, available });
    }
    let assignments = dendrogram.cut(k);
    let centers = centroids(&data, points.ncols(), &assignments, k);
    Ok(ClusteringResult {
        algorithm: Algorithm::Hierarchical,
        assignments,
        k,
        centers,
        exemplars: None,
        diagnostics: Diagnostics::Hierarchical {
            cut_height: if k < n { dendrogram.merges[n - k - 1].height } else { 0.0 },
            merge_heights: dendrogram.heights(),
        },
        seed: 0,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook O(n^3) Ward: recompute the criterion between all current
    /// clusters from their members each step.
    fn naive_ward(x: &DMatrix<f64>) -> Vec<(Vec<usize>, f64)> {
        let n = x.nrows();
        let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let mut out = Vec::new();
        let mean = |c: &[usize]| -> Vec<f64> {
            (0..x.ncols())
                .map(|j| c.iter().map(|&i| x[(i, j)]).sum::<f64>() / c.len() as f64)
                .collect()
        };
        while clusters.len() > 1 {
            let mut best = (f64::INFINITY, 0, 0);
            for a in 0..clusters.len() {
                for b in a + 1..clusters.len() {
                    let (na, nb) = (clusters[a].len() as f64, clusters[b].len() as f64);
                    let w = 2.0 * na * nb / (na + nb) * sq_dist(&mean(&clusters[a]), &mean(&clusters[b]));
                    if w < best.0 - 1e-12 {
                        best = (w, a, b);
                    }
                }
            }
            let b = clusters.remove(best.2);
            clusters[best.1].extend(b);
            let mut members = clusters[best.1].clone();
            members.sort();
            out.push((members, best.0.sqrt()));
        }
        out
    }

    #[test]
    fn matches_naive_ward() {
        let x = DMatrix::from_row_slice(
            7,
            2,
            &[0.0, 0.0, 0.1, 0.3, 4.0, 4.1, 4.4, 3.7, 9.0, 0.5, 8.2, 1.0, 0.7, 0.2],
        );
        let d = ward_dendrogram(&x);
        let naive = naive_ward(&x);
        for (m, (_, h)) in d.merges.iter().zip(&naive) {
            assert!((m.height - h).abs() < 1e-9, "{} vs {}", m.height, h);
        }
        // membership of each merged cluster agrees
        for (step, (members, _)) in naive.iter().enumerate() {
            let labels = d.cut(x.nrows() - step - 1);
            let l = labels[members[0]];
            let same: Vec<usize> = (0..x.nrows()).filter(|&i| labels[i] == l).collect();
            assert_eq!(&same, members);
        }
    }

    #[test]
    fn heights_nondecreasing_and_cuts_nested() {
        let x = DMatrix::from_fn(30, 3, |r, c| ((r * 7 + c * 13) % 11) as f64 / 3.0 + (r / 10) as f64 * 5.0);
        let d = ward_dendrogram(&x);
        assert_eq!(d.merges.len(), 29);
        assert!(d.heights().windows(2).all(|w| w[1] >= w[0] - 1e-9));
        for k in 1..30 {
            let fine = d.cut(k + 1);
            let coarse = d.cut(k);
            for i in 0..30 {
                for j in 0..30 {
                    if fine[i] == fine[j] {
                        assert_eq!(coarse[i], coarse[j]);
                    }
                }
            }
            assert_eq!(*coarse.iter().max().unwrap() + 1, k);
        }
    }

    #[test]
    fn two_points() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 3.0]);
        let r = hierarchical(&x, 2).unwrap();
        assert_eq!(r.assignments, [0, 1]);
        let d = ward_dendrogram(&x);
        assert_eq!(d.merges[0].height, 3.0);
        assert_eq!(d.cut(1), [0, 0]);
    }

    #[test]
    fn duplicates_limit_k() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
        assert!(matches!(hierarchical(&x, 2), Err(Error::KTooLarge { .. })));
        assert_eq!(hierarchical(&x, 1).unwrap().assignments, [0, 0, 0]);
    }
}
