use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::covariance;

/// Points projected onto leading principal components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedMatrix {
    /// Projected points, one row per input row.
    pub rows: DMatrix<f64>,
    /// Orthonormal basis, one column per retained component.
    pub components: DMatrix<f64>,
    /// Share of total variance explained by each retained component.
    pub explained_variance_ratio: Vec<f64>,
    /// Column means subtracted before projection.
    pub mean: Vec<f64>,
    /// All covariance eigenvalues, nonincreasing.
    pub eigenvalues: Vec<f64>,
}

impl ReducedMatrix {
    pub fn dims(&self) -> usize {
        self.components.ncols()
    }

    /// Projects a new point with the fitted mean and basis.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dims())
            .map(|c| {
                x.iter()
                    .zip(&self.mean)
                    .enumerate()
                    .map(|(j, (v, m))| (v - m) * self.components[(j, c)])
                    .sum()
            })
            .collect()
    }
}

/// Projects mean-centred data onto the fewest principal components whose
/// cumulative explained variance reaches `variance_target`, keeping at least
/// two when the data has two or more columns. Data without variance maps to
/// the origin of a single component.
///
/// Component signs are fixed so each component's largest-magnitude loading
/// is positive.
pub fn pca_reduce(x: &DMatrix<f64>, variance_target: f64) -> Result<ReducedMatrix> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    if d == 0 {
        return Err(Error::InvalidParameter("PCA needs at least one column".into()));
    }
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "variance target must lie in (0, 1], got {variance_target}"
        )));
    }
    let eig = SymmetricEigen::new(covariance(x));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    let mean: Vec<f64> = x.row_mean().iter().copied().collect();

    let keep = if total <= 0.0 {
        1
    } else {
        let mut cum = 0.0;
        let mut needed = d;
        for (i, l) in eigenvalues.iter().enumerate() {
            cum += l / total;
            if cum >= variance_target - 1e-12 {
                needed = i + 1;
                break;
            }
        }
        needed.max(d.min(2))
    };

    let mut components = DMatrix::zeros(d, keep);
    for (c, &src) in order.iter().take(keep).enumerate() {
        let v = eig.eigenvectors.column(src);
        let lead = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(_, &val)| val)
            .unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for r in 0..d {
            components[(r, c)] = sign * v[r];
        }
    }
    let rows = if total <= 0.0 {
        DMatrix::zeros(n, 1)
    } else {
        let mut centered = x.clone();
        for r in 0..n {
            for c in 0..d {
                centered[(r, c)] -= mean[c];
            }
        }
        centered * &components
    };
    let explained_variance_ratio = if total <= 0.0 {
        vec![0.0]
    } else {
        eigenvalues[..keep].iter().map(|l| l / total).collect()
    };
    Ok(ReducedMatrix {
        rows,
        components,
        explained_variance_ratio,
        mean,
        eigenvalues,
    })
}
