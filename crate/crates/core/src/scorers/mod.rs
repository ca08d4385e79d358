//! Novelty scorers fit on training embeddings and applied to test embeddings.
//!
//! Every scorer first standardizes its inputs with the training mean and
//! standard deviation, then works in that space. Raw scores are oriented
//! either as densities (higher = more normal; KDE) or as anomaly scores
//! (higher = more novel; everything else) and are min-max mapped into novelty
//! weights in [0, 1] where 1 is the most novel object.

pub mod hbos;
pub mod iforest;
pub mod kde;
pub mod knn;
pub mod lof;
pub mod mahalanobis;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::LatentMatrix;

pub use hbos::HbosModel;
pub use iforest::IsolationForest;
pub use kde::KdeModel;
pub use knn::KnnModel;
pub use lof::LofModel;
pub use mahalanobis::MahalanobisModel;

pub const DEFAULT_LOF_K: usize = 20;
pub const DEFAULT_KNN_K: usize = 5;
pub const DEFAULT_HBOS_BINS: usize = 10;
pub const DEFAULT_TREES: usize = 100;
pub const DEFAULT_SUBSAMPLE: usize = 256;

/// Standard deviations at or below this are treated as zero variance.
const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Kde,
    Lof,
    Knn,
    Mahalanobis,
    Hbos,
    Iforest,
}

impl ScorerKind {
    pub const ALL: [ScorerKind; 6] = [
        ScorerKind::Kde,
        ScorerKind::Lof,
        ScorerKind::Knn,
        ScorerKind::Mahalanobis,
        ScorerKind::Hbos,
        ScorerKind::Iforest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScorerKind::Kde => "kde",
            ScorerKind::Lof => "lof",
            ScorerKind::Knn => "knn",
            ScorerKind::Mahalanobis => "mahalanobis",
            ScorerKind::Hbos => "hbos",
            ScorerKind::Iforest => "iforest",
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            ScorerKind::Kde => Orientation::Density,
            _ => Orientation::Anomaly,
        }
    }
}

impl std::fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScorerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::invalid("scorer", format!("unknown scorer `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Higher raw score = more normal.
    Density,
    /// Higher raw score = more novel.
    Anomaly,
}

/// Scorer hyperparameters. Unset fields take the kind's default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerHyper {
    /// KDE bandwidth; Scott's rule when unset.
    pub bandwidth: Option<f64>,
    /// Neighbour count for LOF (default 20) and kNN (default 5).
    pub k: Option<usize>,
    pub n_bins: usize,
    pub n_trees: usize,
    pub subsample: usize,
    pub seed: u64,
}

impl Default for ScorerHyper {
    fn default() -> Self {
        Self {
            bandwidth: None,
            k: None,
            n_bins: DEFAULT_HBOS_BINS,
            n_trees: DEFAULT_TREES,
            subsample: DEFAULT_SUBSAMPLE,
            seed: 0,
        }
    }
}

/// Per-dimension standardization fit on the training matrix.
///
/// Dimensions with zero variance are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub input_dim: usize,
    pub kept: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(z: &LatentMatrix) -> Result<Self> {
        let means = z.column_means();
        let stds = z.column_stds();
        let kept: Vec<usize> = (0..z.n_cols()).filter(|&j| stds[j] > MIN_STD).collect();
        if kept.is_empty() {
            return Err(Error::Degenerate(
                "all columns of the training matrix are constant".into(),
            ));
        }
        if kept.len() < z.n_cols() {
            let dropped: Vec<usize> = (0..z.n_cols()).filter(|j| !kept.contains(j)).collect();
            log::warn!("dropping zero-variance latent dims {dropped:?}");
        }
        Ok(Self {
            input_dim: z.n_cols(),
            mean: kept.iter().map(|&j| means[j]).collect(),
            std: kept.iter().map(|&j| stds[j]).collect(),
            kept,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.kept.len()
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        self.kept
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&j, (m, s))| (row[j] - m) / s)
            .collect()
    }

    pub fn transform_matrix(&self, z: &LatentMatrix) -> Result<LatentMatrix> {
        self.check(z)?;
        let mut data = Vec::with_capacity(z.n_rows() * self.output_dim());
        for row in z.rows() {
            data.extend(self.transform(row));
        }
        LatentMatrix::new(z.n_rows(), self.output_dim(), data)
    }

    fn check(&self, z: &LatentMatrix) -> Result<()> {
        if z.n_cols() != self.input_dim {
            return Err(Error::shape(
                format!("{} latent columns", self.input_dim),
                format!("{} columns", z.n_cols()),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScorerPayload {
    Kde(KdeModel),
    Lof(LofModel),
    Knn(KnnModel),
    Mahalanobis(MahalanobisModel),
    Hbos(HbosModel),
    Iforest(IsolationForest),
}

/// A fitted scorer: standardization plus the kind-specific state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerModel {
    pub standardizer: Standardizer,
    pub payload: ScorerPayload,
}

impl ScorerModel {
    pub fn kind(&self) -> ScorerKind {
        match self.payload {
            ScorerPayload::Kde(_) => ScorerKind::Kde,
            ScorerPayload::Lof(_) => ScorerKind::Lof,
            ScorerPayload::Knn(_) => ScorerKind::Knn,
            ScorerPayload::Mahalanobis(_) => ScorerKind::Mahalanobis,
            ScorerPayload::Hbos(_) => ScorerKind::Hbos,
            ScorerPayload::Iforest(_) => ScorerKind::Iforest,
        }
    }

    pub fn orientation(&self) -> Orientation {
        self.kind().orientation()
    }

    /// Raw score of one latent vector (unstandardized input).
    pub fn raw_score(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.standardizer.input_dim {
            return Err(Error::shape(self.standardizer.input_dim, z.len()));
        }
        let x = self.standardizer.transform(z);
        Ok(match &self.payload {
            ScorerPayload::Kde(m) => m.log_density(&x),
            ScorerPayload::Lof(m) => m.lof_factor(&x),
            ScorerPayload::Knn(m) => m.knn_distance(&x),
            ScorerPayload::Mahalanobis(m) => m.distance(&x),
            ScorerPayload::Hbos(m) => m.score(&x),
            ScorerPayload::Iforest(m) => m.score(&x),
        })
    }
}

/// Fits a scorer of the given kind on the training embeddings.
pub fn fit(kind: ScorerKind, z_train: &LatentMatrix, hyper: &ScorerHyper) -> Result<ScorerModel> {
    let n = z_train.n_rows();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "scorers need at least 2 training points, got {n}"
        )));
    }
    let standardizer = Standardizer::fit(z_train)?;
    let points = standardizer.transform_matrix(z_train)?;
    let payload = match kind {
        ScorerKind::Kde => ScorerPayload::Kde(KdeModel::new(points, hyper.bandwidth)?),
        ScorerKind::Lof => ScorerPayload::Lof(LofModel::fit(points, hyper.k.unwrap_or(DEFAULT_LOF_K))?),
        ScorerKind::Knn => ScorerPayload::Knn(KnnModel::new(points, hyper.k.unwrap_or(DEFAULT_KNN_K))?),
        ScorerKind::Mahalanobis => ScorerPayload::Mahalanobis(MahalanobisModel::fit(&points)?),
        ScorerKind::Hbos => ScorerPayload::Hbos(HbosModel::fit(&points, hyper.n_bins)?),
        ScorerKind::Iforest => ScorerPayload::Iforest(IsolationForest::fit(
            &points,
            hyper.n_trees,
            hyper.subsample,
            hyper.seed,
        )?),
    };
    Ok(ScorerModel {
        standardizer,
        payload,
    })
}

/// Raw scores and the derived novelty weights, row-aligned with the test
/// matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyScores {
    pub raw: Vec<f64>,
    /// Weights in [0, 1]; 1 = most novel.
    pub novelty: Vec<f64>,
}

impl NoveltyScores {
    pub fn len(&self) -> usize {
        self.novelty.len()
    }

    pub fn is_empty(&self) -> bool {
        self.novelty.is_empty()
    }
}

/// Min-max maps raw scores into [0, 1] with higher = more novel.
///
/// Density scores are inverted. If every score ties, all weights are 0.5.
pub fn normalize(raw: &[f64], orientation: Orientation) -> Vec<f64> {
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return vec![0.5; raw.len()];
    }
    let span = hi - lo;
    raw.iter()
        .map(|&v| {
            let w = match orientation {
                Orientation::Density => (hi - v) / span,
                Orientation::Anomaly => (v - lo) / span,
            };
            w.clamp(0.0, 1.0)
        })
        .collect()
}

/// Scores every row of `z_test` and normalizes the result.
pub fn novelty_scores(model: &ScorerModel, z_test: &LatentMatrix) -> Result<NoveltyScores> {
    if z_test.n_rows() == 0 {
        return Err(Error::InsufficientData("no test rows to score".into()));
    }
    model.standardizer.check(z_test)?;
    let raw: Vec<f64> = (0..z_test.n_rows())
        .into_par_iter()
        .map(|i| model.raw_score(z_test.row(i)))
        .collect::<Result<_>>()?;
    if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("raw score of row {i} is {}", raw[i])));
    }
    let novelty = normalize(&raw, model.orientation());
    Ok(NoveltyScores { raw, novelty })
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Indices and distances of the `k` nearest rows of `points` to `z`, ordered by
/// (distance, index). `skip` excludes one row (the query itself).
pub(crate) fn k_nearest(points: &LatentMatrix, z: &[f64], k: usize, skip: Option<usize>) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = points
        .rows()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, p)| (i, dist(p, z)))
        .collect();
    let by_dist = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
    if k < all.len() {
        all.select_nth_unstable_by(k, by_dist);
        all.truncate(k);
    }
    all.sort_by(by_dist);
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_rules() {
        assert_eq!(normalize(&[-1.0, -3.0], Orientation::Density), vec![0.0, 1.0]);
        assert_eq!(normalize(&[-1.0, -3.0], Orientation::Anomaly), vec![1.0, 0.0]);
        assert_eq!(normalize(&[2.0, 2.0, 2.0], Orientation::Density), vec![0.5; 3]);
    }

    #[test]
    fn kind_parsing_and_orientation() {
        assert_eq!("LOF".parse::<ScorerKind>().unwrap(), ScorerKind::Lof);
        assert!("ocsvm".parse::<ScorerKind>().is_err());
        assert_eq!(ScorerKind::Kde.orientation(), Orientation::Density);
        for k in &ScorerKind::ALL[1..] {
            assert_eq!(k.orientation(), Orientation::Anomaly);
        }
    }

    #[test]
    fn constant_dims_are_dropped() {
        let z = LatentMatrix::from_rows(&[[1.0, 5.0], [3.0, 5.0], [2.0, 5.0]]).unwrap();
        let s = Standardizer::fit(&z).unwrap();
        assert_eq!(s.kept, vec![0]);
        let constant = LatentMatrix::from_rows(&[[1.0, 5.0], [1.0, 5.0]]).unwrap();
        assert!(matches!(Standardizer::fit(&constant), Err(Error::Degenerate(_))));
    }

    #[test]
    fn fit_preconditions() {
        let one = LatentMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(fit(ScorerKind::Kde, &one, &ScorerHyper::default()).is_err());
        let z = LatentMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]]).unwrap();
        let err = fit(
            ScorerKind::Lof,
            &z,
            &ScorerHyper {
                k: Some(3),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(err.to_string().contains("k must be < N"), "{err}");
    }

    #[test]
    fn kde_novelty_is_anti_monotone_in_density() {
        let z = LatentMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.5], [0.5, 1.0], [0.2, 0.1]]).unwrap();
        let model = fit(ScorerKind::Kde, &z, &ScorerHyper::default()).unwrap();
        let test = LatentMatrix::from_rows(&[[0.3, 0.3], [5.0, 5.0], [1.0, 1.0]]).unwrap();
        let s = novelty_scores(&model, &test).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if s.raw[i] < s.raw[j] {
                    assert!(s.novelty[i] > s.novelty[j]);
                }
            }
        }
        assert!(s.novelty.contains(&1.0));
        assert!(s.novelty.contains(&0.0));
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let z = LatentMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.5], [0.5, 1.0]]).unwrap();
        let model = fit(ScorerKind::Mahalanobis, &z, &ScorerHyper::default()).unwrap();
        let bad = LatentMatrix::from_rows(&[[0.0, 0.0, 1.0]]).unwrap();
        assert!(novelty_scores(&model, &bad).is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let z = LatentMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.5], [0.5, 1.0], [0.3, 0.9]]).unwrap();
        for kind in ScorerKind::ALL {
            let hyper = ScorerHyper {
                k: Some(2),
                n_trees: 5,
                ..Default::default()
            };
            let m = fit(kind, &z, &hyper).unwrap();
            let back: ScorerModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
            assert_eq!(back.kind(), kind);
            assert_eq!(back.raw_score(&[0.2, 0.2]).unwrap(), m.raw_score(&[0.2, 0.2]).unwrap());
        }
    }
}
