use serde::{Deserialize, Serialize};

use super::k_nearest;
use crate::error::{Error, Result};
use crate::matrix::LatentMatrix;

/// Floor on the mean reachability distance, for duplicated points.
pub const MIN_REACH: f64 = 1e-12;

/// Local outlier factor in novelty mode: training points keep their own
/// k-distance and local reachability density, queries are scored against them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LofModel {
    pub points: LatentMatrix,
    pub k: usize,
    pub k_distance: Vec<f64>,
    pub lrd: Vec<f64>,
}

impl LofModel {
    pub fn fit(points: LatentMatrix, k: usize) -> Result<Self> {
        let n = points.n_rows();
        if k == 0 {
            return Err(Error::invalid("k", "must be >= 1"));
        }
        if k >= n {
            return Err(Error::invalid("k", format!("k must be < N (k = {k}, N = {n})")));
        }
        let neighbours: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| k_nearest(&points, points.row(i), k, Some(i)))
            .collect();
        let k_distance: Vec<f64> = neighbours.iter().map(|nb| nb[k - 1].1).collect();
        let lrd = neighbours
            .iter()
            .map(|nb| local_reach_density(nb, &k_distance))
            .collect();
        Ok(Self {
            points,
            k,
            k_distance,
            lrd,
        })
    }

    pub fn lof_factor(&self, z: &[f64]) -> f64 {
        let nb = k_nearest(&self.points, z, self.k, None);
        let lrd_z = local_reach_density(&nb, &self.k_distance);
        let mean_lrd = nb.iter().map(|&(o, _)| self.lrd[o]).sum::<f64>() / nb.len() as f64;
        mean_lrd / lrd_z
    }
}

fn local_reach_density(neighbours: &[(usize, f64)], k_distance: &[f64]) -> f64 {
    let mean_reach = neighbours
        .iter()
        .map(|&(o, d)| d.max(k_distance[o]))
        .sum::<f64>()
        / neighbours.len() as f64;
    1.0 / mean_reach.max(MIN_REACH)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_stay_finite() {
        let pts = LatentMatrix::from_rows(&[[0.0], [0.0], [0.0], [1.0]]).unwrap();
        let m = LofModel::fit(pts, 2).unwrap();
        let v = m.lof_factor(&[0.0]);
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn k_must_be_below_n() {
        let pts = LatentMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let err = LofModel::fit(pts, 2).unwrap_err().to_string();
        assert!(err.contains("k must be < N"));
    }
}
