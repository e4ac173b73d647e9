//! PCA baseline via eigendecomposition of the sample covariance.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::data::{DataMatrix, Embedding};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// m×d, orthonormal rows.
    pub components: Vec<f64>,
    /// Eigenvalues of the covariance (divisor N - 1), non-increasing.
    pub explained_variance: Vec<f64>,
    pub dim: usize,
}

impl PcaModel {
    pub fn component(&self, c: usize) -> &[f64] {
        &self.components[c * self.dim..(c + 1) * self.dim]
    }

    pub fn n_components(&self) -> usize {
        self.explained_variance.len()
    }

    pub fn transform(&self, data: &DataMatrix) -> Result<Embedding> {
        if data.cols() != self.dim {
            return Err(Error::invalid(format!("model expects {} columns, got {}", self.dim, data.cols())));
        }
        let m = self.n_components();
        let mut out = Vec::with_capacity(data.rows() * m);
        let mut centered = vec![0.0; self.dim];
        for row in data.iter_rows() {
            for ((c, v), mu) in centered.iter_mut().zip(row).zip(&self.mean) {
                *c = v - mu;
            }
            for k in 0..m {
                out.push(self.component(k).iter().zip(&centered).map(|(a, b)| a * b).sum());
            }
        }
        DataMatrix::new(data.rows(), m, out)
    }
}

/// Projects onto the top `m` principal directions. Each component is
/// signed so that its largest-magnitude entry is positive.
pub fn pca_fit_transform(data: &DataMatrix, m: usize) -> Result<(PcaModel, Embedding)> {
    let (n, d) = (data.rows(), data.cols());
    if m < 1 || m > n.min(d) {
        return Err(Error::invalid(format!("component count {m} must lie in [1, {}]", n.min(d))));
    }
    let mean = data.column_means();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for row in data.iter_rows() {
        for ((c, v), mu) in centered.iter_mut().zip(row).zip(&mean) {
            *c = v - mu;
        }
        for a in 0..d {
            for b in a..d {
                cov[(a, b)] += centered[a] * centered[b];
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(m * d);
    let mut explained_variance = Vec::with_capacity(m);
    for &c in order.iter().take(m) {
        let v = eig.eigenvectors.column(c);
        let pivot = (0..d).fold(0, |best, i| if v[i].abs() > v[best].abs() { i } else { best });
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        components.extend(v.iter().map(|x| sign * x));
        explained_variance.push(eig.eigenvalues[c].max(0.0));
    }
    let model = PcaModel { mean, components, explained_variance, dim: d };
    let emb = model.transform(data)?;
    Ok((model, emb))
}
