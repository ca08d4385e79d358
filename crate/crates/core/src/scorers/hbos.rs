use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::LatentMatrix;

/// Floor on normalized bin heights; also the height assigned outside the
/// training range.
pub const HEIGHT_FLOOR: f64 = 1e-9;

/// Equal-width histogram over one dimension, heights normalized so the tallest
/// bin has height 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub heights: Vec<f64>,
}

impl Histogram {
    fn fit(values: &[f64], n_bins: usize) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0usize; n_bins];
        let mut hist = Self {
            min,
            max,
            heights: Vec::new(),
        };
        for &v in values {
            if let Some(b) = hist.bin(v, n_bins) {
                counts[b] += 1;
            }
        }
        let top = *counts.iter().max().unwrap_or(&1) as f64;
        hist.heights = counts.iter().map(|&c| c as f64 / top).collect();
        hist
    }

    fn bin(&self, v: f64, n_bins: usize) -> Option<usize> {
        if !(self.min..=self.max).contains(&v) {
            return None;
        }
        if self.max == self.min {
            return Some(0);
        }
        let t = (v - self.min) / (self.max - self.min);
        Some(((t * n_bins as f64) as usize).min(n_bins - 1))
    }

    pub fn height(&self, v: f64) -> f64 {
        self.bin(v, self.heights.len())
            .map_or(HEIGHT_FLOOR, |b| self.heights[b].max(HEIGHT_FLOOR))
    }
}

/// Histogram-based outlier score: Σ_dims −ln(height).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HbosModel {
    pub histograms: Vec<Histogram>,
}

impl HbosModel {
    pub fn fit(points: &LatentMatrix, n_bins: usize) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::invalid("n_bins", "must be >= 2"));
        }
        if points.n_rows() == 0 {
            return Err(Error::InsufficientData("HBOS needs at least one point".into()));
        }
        let histograms = (0..points.n_cols())
            .map(|j| Histogram::fit(&points.column(j), n_bins))
            .collect();
        Ok(Self { histograms })
    }

    pub fn score(&self, z: &[f64]) -> f64 {
        self.histograms
            .iter()
            .zip(z)
            .map(|(h, &v)| -h.height(v).ln())
            .sum()
    }
}
