use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::LatentMatrix;
use crate::rng;

const TAG_TREE: u64 = 0x1F0E;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    Split {
        dim: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        size: usize,
    },
}

impl Node {
    /// Edges from the root to the external node reached by `z`, plus the
    /// expected remaining depth c(size) of that node.
    pub fn path_length(&self, z: &[f64]) -> f64 {
        let mut node = self;
        let mut depth = 0.0;
        loop {
            match node {
                Node::Leaf { size } => return depth + average_path_length(*size),
                Node::Split {
                    dim,
                    threshold,
                    left,
                    right,
                } => {
                    node = if z[*dim] < *threshold { left } else { right };
                    depth += 1.0;
                }
            }
        }
    }
}

/// H(n) with the exact harmonic sum.
fn harmonic(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}

/// Average path length of an unsuccessful BST search among n points:
/// c(n) = 2H(n−1) − 2(n−1)/n, with c(0) = c(1) = 0.
pub fn average_path_length(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    2.0 * harmonic(n - 1) - 2.0 * (n - 1) as f64 / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForest {
    pub subsample: usize,
    pub trees: Vec<Node>,
}

impl IsolationForest {
    /// Grows `n_trees` trees, each on a subsample of min(`subsample`, N)
    /// points drawn without replacement, to depth ⌈log₂ ψ⌉.
    pub fn fit(points: &LatentMatrix, n_trees: usize, subsample: usize, seed: u64) -> Result<Self> {
        if n_trees == 0 {
            return Err(Error::invalid("n_trees", "must be >= 1"));
        }
        if subsample < 2 {
            return Err(Error::invalid("subsample", "must be >= 2"));
        }
        let n = points.n_rows();
        if n < 2 {
            return Err(Error::InsufficientData("isolation forest needs at least 2 points".into()));
        }
        let psi = subsample.min(n);
        let limit = (psi as f64).log2().ceil() as usize;
        let trees = (0..n_trees)
            .map(|t| {
                let mut rng = rng::stream(seed, &[TAG_TREE, t as u64]);
                let mut sample = index::sample(&mut rng, n, psi).into_vec();
                sample.sort_unstable();
                grow(points, &mut sample, 0, limit, &mut rng)
            })
            .collect();
        Ok(Self {
            subsample: psi,
            trees,
        })
    }

    pub fn mean_path_length(&self, z: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.path_length(z)).sum::<f64>() / self.trees.len() as f64
    }

    /// s = 2^(−E[h(z)] / c(ψ)); near 1 for anomalies, well below 0.5 for inliers.
    pub fn score(&self, z: &[f64]) -> f64 {
        2f64.powf(-self.mean_path_length(z) / average_path_length(self.subsample))
    }
}

fn grow(points: &LatentMatrix, idx: &mut [usize], depth: usize, limit: usize, rng: &mut impl Rng) -> Node {
    if depth >= limit || idx.len() <= 1 {
        return Node::Leaf { size: idx.len() };
    }
    let d = points.n_cols();
    let ranges: Vec<(usize, f64, f64)> = (0..d)
        .filter_map(|j| {
            let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = points.row(i)[j];
                (lo.min(v), hi.max(v))
            });
            (hi > lo).then_some((j, lo, hi))
        })
        .collect();
    if ranges.is_empty() {
        return Node::Leaf { size: idx.len() };
    }
    let (dim, lo, hi) = ranges[rng.random_range(0..ranges.len())];
    let mut threshold = rng.random_range(lo..hi);
    if threshold <= lo {
        // Keep both children non-empty.
        threshold = lo + (hi - lo) * 0.5;
    }
    let mut split = 0;
    for k in 0..idx.len() {
        if points.row(idx[k])[dim] < threshold {
            idx.swap(split, k);
            split += 1;
        }
    }
    let (left, right) = idx.split_at_mut(split);
    Node::Split {
        dim,
        threshold,
        left: Box::new(grow(points, left, depth + 1, limit, rng)),
        right: Box::new(grow(points, right, depth + 1, limit, rng)),
    }
}
