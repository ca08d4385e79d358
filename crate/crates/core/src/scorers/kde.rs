use serde::{Deserialize, Serialize};

use super::sq_dist;
use crate::error::{Error, Result};
use crate::matrix::LatentMatrix;

/// Gaussian kernel density estimate with an isotropic bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    pub points: LatentMatrix,
    pub bandwidth: f64,
}

/// Scott's rule for a scalar bandwidth: n^(−1/(d+4)).
pub fn scott_bandwidth(n: usize, d: usize) -> f64 {
    (n as f64).powf(-1.0 / (d as f64 + 4.0))
}

impl KdeModel {
    /// Builds the estimate over `points`, which are used as given (no
    /// standardization). The bandwidth defaults to Scott's rule.
    pub fn new(points: LatentMatrix, bandwidth: Option<f64>) -> Result<Self> {
        if points.n_rows() == 0 || points.n_cols() == 0 {
            return Err(Error::InsufficientData("KDE needs at least one point".into()));
        }
        let bandwidth = bandwidth.unwrap_or_else(|| scott_bandwidth(points.n_rows(), points.n_cols()));
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::invalid("bandwidth", format!("{bandwidth} must be finite and > 0")));
        }
        Ok(Self { points, bandwidth })
    }

    /// log f(z) with f(z) = (1/N) Σᵢ N(z; zᵢ, h²I), evaluated by log-sum-exp.
    pub fn log_density(&self, z: &[f64]) -> f64 {
        let h2 = self.bandwidth * self.bandwidth;
        let d = self.points.n_cols() as f64;
        let exps: Vec<f64> = self.points.rows().map(|p| -sq_dist(p, z) / (2.0 * h2)).collect();
        let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + exps.iter().map(|e| (e - max).exp()).sum::<f64>().ln();
        lse - (self.points.n_rows() as f64).ln()
            - 0.5 * d * (2.0 * std::f64::consts::PI).ln()
            - d * self.bandwidth.ln()
    }
}
