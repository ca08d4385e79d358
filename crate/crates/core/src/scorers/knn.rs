use serde::{Deserialize, Serialize};

use super::k_nearest;
use crate::error::{Error, Result};
use crate::matrix::LatentMatrix;

/// Distance to the k-th nearest training point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub points: LatentMatrix,
    pub k: usize,
}

impl KnnModel {
    pub fn new(points: LatentMatrix, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k", "must be >= 1"));
        }
        if k >= points.n_rows() {
            return Err(Error::invalid(
                "k",
                format!("k must be < N (k = {k}, N = {})", points.n_rows()),
            ));
        }
        Ok(Self { points, k })
    }

    pub fn knn_distance(&self, z: &[f64]) -> f64 {
        k_nearest(&self.points, z, self.k, None)[self.k - 1].1
    }
}
