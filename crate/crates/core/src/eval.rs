//! Unsupervised scoring and selection of feature subsets.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureSubset, SubsetId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetScore {
    pub subset_id: SubsetId,
    pub members: Vec<String>,
    pub entropy: f64,
    pub representation_entropy: f64,
}

pub fn score_subset(m: &FeatureMatrix) -> Result<SubsetScore> {
    Ok(SubsetScore {
        subset_id: m.subset.id,
        members: m.subset.members.iter().map(|f| f.name().to_string()).collect(),
        entropy: dataset_entropy(m)?,
        representation_entropy: representation_entropy(m)?,
    })
}

fn binary_entropy(s: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { p * p.ln() } else { 0.0 };
    -(term(s) + term(1.0 - s))
}

/// Similarity entropy of the point set, averaged over unordered pairs.
///
/// Pair similarity is `exp(-α d)` with `α = ln 2 / mean distance`, so a pair
/// at the mean distance has similarity 0.5 and contributes the maximum
/// `ln 2`. Well-clustered data has similarities near 0 or 1 and low entropy.
pub fn dataset_entropy(m: &FeatureMatrix) -> Result<f64> {
    entropy_of_rows(&m.values)
}

pub(crate) fn entropy_of_rows(x: &DMatrix<f64>) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push((x.row(i) - x.row(j)).norm());
        }
    }
    let mean = dists.iter().sum::<f64>() / dists.len() as f64;
    if mean == 0.0 {
        return Ok(0.0);
    }
    let alpha = std::f64::consts::LN_2 / mean;
    let total: f64 = dists.iter().map(|&d| binary_entropy((-alpha * d).exp())).sum();
    Ok(total / dists.len() as f64)
}

/// Eigenvalues of the column covariance matrix, clamped at zero, in
/// nonincreasing order.
pub(crate) fn covariance_eigenvalues(x: &DMatrix<f64>) -> Vec<f64> {
    let cov = covariance(x);
    let mut ev: Vec<f64> = SymmetricEigen::new(cov)
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0))
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

pub(crate) fn covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mean = x.row_mean();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    (centered.transpose() * &centered) / denom
}

/// Shannon entropy of the normalised covariance eigenvalues. Ranges from 0
/// (all variance along one direction) to `ln d` (isotropic).
pub fn representation_entropy(m: &FeatureMatrix) -> Result<f64> {
    representation_entropy_of(&m.values)
}

pub(crate) fn representation_entropy_of(x: &DMatrix<f64>) -> Result<f64> {
    if x.nrows() < 2 || x.ncols() == 0 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: x.nrows(),
        });
    }
    Ok(normalized_spectrum(x)
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum())
}

/// Covariance eigenvalues divided by their sum; empty when the data has no
/// variance.
pub fn normalized_spectrum(x: &DMatrix<f64>) -> Vec<f64> {
    let ev = covariance_eigenvalues(x);
    let total: f64 = ev.iter().sum();
    if total <= 0.0 {
        return Vec::new();
    }
    ev.iter().map(|l| l / total).collect()
}

/// Dissimilarity `1 - |r|` between two columns, `r` being Pearson
/// correlation. Two constant columns are identical; a constant column is
/// uncorrelated with anything else.
pub fn feature_dissimilarity(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    match (saa > 0.0, sbb > 0.0) {
        (false, false) => 0.0,
        (true, true) => (1.0 - (sab / (saa * sbb).sqrt()).abs()).max(0.0),
        _ => 1.0,
    }
}

/// Dissimilarity below which two features count as exact copies.
const DUPLICATE_TOLERANCE: f64 = 1e-12;

/// Feature selection by feature similarity.
///
/// Repeatedly picks the feature whose `k`-th nearest neighbour (in
/// correlation dissimilarity) is closest, keeps it and discards those `k`
/// neighbours; `k` shrinks while no neighbourhood is as tight as the last
/// accepted radius. Exact copies that survive are collapsed at the end.
/// Inputs with fewer than three features are returned unchanged.
pub fn fsfs_select(m: &FeatureMatrix, k_init: usize) -> Result<FeatureSubset> {
    let d = m.ncols();
    if d < 3 {
        return FeatureSubset::custom(SubsetId::Fsfs, m.subset.members.iter().copied());
    }
    if k_init == 0 {
        return Err(Error::InvalidParameter("fsfs k must be at least 1".into()));
    }
    let cols: Vec<Vec<f64>> = (0..d).map(|c| m.values.column(c).iter().copied().collect()).collect();
    let mut dis = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i + 1..d {
            let v = feature_dissimilarity(&cols[i], &cols[j]);
            dis[i][j] = v;
            dis[j][i] = v;
        }
    }
    // neighbours of `i` within `kept`, nearest first (ties by index)
    let neighbors = |i: usize, kept: &[usize]| -> Vec<usize> {
        let mut v: Vec<usize> = kept.iter().copied().filter(|&j| j != i).collect();
        v.sort_by(|&a, &b| dis[i][a].total_cmp(&dis[i][b]).then(a.cmp(&b)));
        v
    };
    // feature with the smallest k-th neighbour dissimilarity
    let best = |k: usize, kept: &[usize]| -> (usize, f64) {
        kept.iter()
            .map(|&i| (i, dis[i][neighbors(i, kept)[k - 1]]))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .unwrap()
    };

    let mut kept: Vec<usize> = (0..d).collect();
    let mut k = k_init.min(d - 1);
    'outer: loop {
        let (i, epsilon) = best(k, &kept);
        let drop: Vec<usize> = neighbors(i, &kept)
            .into_iter()
            .take(k.min(kept.len() - 2))
            .collect();
        kept.retain(|j| !drop.contains(j));
        if kept.len() <= 2 {
            break;
        }
        k = k.min(kept.len() - 1);
        if k <= 1 {
            break;
        }
        // shrink k until some feature has its k-th neighbour within epsilon
        while best(k, &kept).1 > epsilon {
            k -= 1;
            if k <= 1 {
                break 'outer;
            }
        }
    }
    // collapse exact duplicates, keeping the lower index
    let mut i = 0;
    while i < kept.len() && kept.len() > 2 {
        let a = kept[i];
        kept.retain(|&b| b <= a || dis[a][b] > DUPLICATE_TOLERANCE);
        i += 1;
    }
    FeatureSubset::custom(SubsetId::Fsfs, kept.into_iter().map(|c| m.subset.members[c]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Feature;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(values: DMatrix<f64>) -> FeatureMatrix {
        let members = Feature::ALL[..values.ncols()].to_vec();
        FeatureMatrix {
            egos: (0..values.nrows()).map(|i| format!("{i:03}")).collect(),
            subset: FeatureSubset::custom(SubsetId::Fsfs, members).unwrap(),
            values,
        }
    }

    #[test]
    fn entropy_extremes() {
        // two points: the only pair sits at the mean distance
        let m = matrix(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]));
        assert!((dataset_entropy(&m).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        let m = matrix(DMatrix::from_row_slice(2, 2, &[0.3, 0.3, 0.3, 0.3]));
        assert_eq!(dataset_entropy(&m).unwrap(), 0.0);
        assert!(dataset_entropy(&matrix(DMatrix::zeros(1, 2))).is_err());
    }

    #[test]
    fn entropy_lower_for_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut blobs = Vec::new();
        let mut uniform = Vec::new();
        for i in 0..20 {
            let c = if i < 10 { 0.1 } else { 0.9 };
            blobs.extend([c + rng.random_range(-0.02..0.02), c + rng.random_range(-0.02..0.02)]);
            uniform.extend([rng.random::<f64>(), rng.random::<f64>()]);
        }
        let eb = dataset_entropy(&matrix(DMatrix::from_row_slice(20, 2, &blobs))).unwrap();
        let eu = dataset_entropy(&matrix(DMatrix::from_row_slice(20, 2, &uniform))).unwrap();
        assert!(eb < eu, "{eb} vs {eu}");
    }

    #[test]
    fn representation_entropy_cases() {
        // rows ±e_i have identity-proportional covariance
        let mut rows = Vec::new();
        for i in 0..3 {
            for s in [1.0, -1.0] {
                let mut r = [0.0; 3];
                r[i] = s;
                rows.extend(r);
            }
        }
        let h = representation_entropy(&matrix(DMatrix::from_row_slice(6, 3, &rows))).unwrap();
        assert!((h - 3f64.ln()).abs() < 1e-12);
        let line = DMatrix::from_fn(5, 3, |r, c| r as f64 * (c as f64 + 1.0));
        assert!(representation_entropy(&matrix(line)).unwrap().abs() < 1e-12);
        let flat = DMatrix::from_element(4, 2, 0.5);
        assert_eq!(representation_entropy(&matrix(flat)).unwrap(), 0.0);
    }

    #[test]
    fn spectrum_three_to_one() {
        // points (±√3·a, ±b) give covariance diag(3,1) up to scale
        let s3 = 3f64.sqrt();
        let x = DMatrix::from_row_slice(4, 2, &[s3, 1.0, -s3, 1.0, s3, -1.0, -s3, -1.0]);
        let p = normalized_spectrum(&x);
        assert!((p[0] - 0.75).abs() < 1e-12 && (p[1] - 0.25).abs() < 1e-12);
        let h = representation_entropy(&matrix(x)).unwrap();
        assert!((h - 0.562335144618).abs() < 1e-9);
    }

    #[test]
    fn fsfs_drops_a_scaled_copy() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = 60;
            let mut x = DMatrix::from_fn(n, 6, |_, _| rng.random::<f64>());
            for r in 0..n {
                x[(r, 1)] = 2.0 * x[(r, 0)];
            }
            let m = matrix(x);
            let s = fsfs_select(&m, 2).unwrap();
            let a = s.members.contains(&m.subset.members[0]);
            let b = s.members.contains(&m.subset.members[1]);
            assert!(!(a && b), "{:?}", s.members);
        }
    }

    #[test]
    fn fsfs_small_input_unchanged() {
        let m = matrix(DMatrix::from_fn(5, 2, |r, c| (r * c) as f64));
        assert_eq!(fsfs_select(&m, 2).unwrap().members, m.subset.members);
    }
}
