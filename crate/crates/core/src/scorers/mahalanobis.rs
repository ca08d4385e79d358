use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::LatentMatrix;

/// Relative ridge added to the covariance diagonal: λ = 1e-6 · trace / d.
pub const RIDGE: f64 = 1e-6;

/// Mahalanobis distance to the training mean, via the Cholesky factor of the
/// ridged sample covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MahalanobisModel {
    pub mean: Vec<f64>,
    /// Lower-triangular Cholesky factor, row-major d×d.
    pub cholesky: Vec<f64>,
}

impl MahalanobisModel {
    pub fn fit(points: &LatentMatrix) -> Result<Self> {
        let n = points.n_rows();
        if n < 2 {
            return Err(Error::InsufficientData("covariance needs at least 2 points".into()));
        }
        let d = points.n_cols();
        let mean = points.column_means();
        let mut cov = vec![0.0; d * d];
        for row in points.rows() {
            for a in 0..d {
                let da = row[a] - mean[a];
                for b in 0..=a {
                    cov[a * d + b] += da * (row[b] - mean[b]);
                }
            }
        }
        for a in 0..d {
            for b in 0..=a {
                cov[a * d + b] /= (n - 1) as f64;
                cov[b * d + a] = cov[a * d + b];
            }
        }
        Self::from_moments(mean, &cov)
    }

    /// Builds the model from a mean and a row-major covariance; the ridge is
    /// applied here.
    pub fn from_moments(mean: Vec<f64>, covariance: &[f64]) -> Result<Self> {
        let d = mean.len();
        if covariance.len() != d * d {
            return Err(Error::shape(d * d, covariance.len()));
        }
        let mut cov = DMatrix::from_row_slice(d, d, covariance);
        let ridge = RIDGE * cov.trace() / d as f64;
        for i in 0..d {
            cov[(i, i)] += ridge;
        }
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Degenerate("covariance is singular even after ridge".into()))?;
        let l = chol.l();
        let cholesky = (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).map(|(r, c)| l[(r, c)]).collect();
        Ok(Self { mean, cholesky })
    }

    pub fn distance(&self, z: &[f64]) -> f64 {
        let d = self.mean.len();
        // Forward substitution L y = z − μ; the distance is ‖y‖.
        let mut y = vec![0.0; d];
        for (r, (zr, mr)) in z.iter().zip(&self.mean).enumerate() {
            let mut acc = zr - mr;
            for (l, yc) in self.cholesky[r * d..r * d + r].iter().zip(&y) {
                acc -= l * yc;
            }
            y[r] = acc / self.cholesky[r * d + r];
        }
        y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
