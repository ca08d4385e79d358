//! Contamination study: which scorer best finds a colour it never saw?
//!
//! One colour class is removed from the training split. The test split is
//! rebuilt so that a fixed fraction of it comes from the removed class; those
//! samples are novel by construction and carry label 1. Each scorer is fit on
//! the cleaned training embeddings and judged by ROC-AUC on the test split,
//! repeated with fresh test samples.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::LatentMatrix;
use crate::rng;
use crate::scorers::{self, ScorerHyper, ScorerKind};
use crate::synthgen::ColorClass;

const TAG_SPLIT: u64 = 0xC047;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContaminationSpec {
    pub contamination_class: ColorClass,
    /// Share of the test split drawn from the contamination class.
    pub fractions: Vec<f64>,
    pub repeats: usize,
    pub scorers: Vec<ScorerKind>,
    /// Size of the engineered test split; the largest size the pools allow
    /// when unset.
    pub test_size: Option<usize>,
    pub hyper: ScorerHyper,
    pub seed: u64,
}

impl Default for ContaminationSpec {
    fn default() -> Self {
        Self {
            contamination_class: ColorClass::Green,
            fractions: vec![0.10],
            repeats: 3,
            scorers: ScorerKind::ALL.to_vec(),
            test_size: None,
            hyper: ScorerHyper::default(),
            seed: 0,
        }
    }
}

impl ContaminationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::invalid("fraction", "at least one fraction is required"));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(Error::invalid("fraction", format!("{f} outside (0, 1]")));
        }
        if self.repeats == 0 {
            return Err(Error::invalid("repeats", "must be >= 1"));
        }
        if self.scorers.is_empty() {
            return Err(Error::invalid("scorers", "at least one scorer is required"));
        }
        Ok(())
    }
}

/// Indices into the original splits plus ground-truth novelty labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContaminationSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// `true` for contamination-class test samples.
    pub labels: Vec<bool>,
}

impl ContaminationSplit {
    pub fn n_contaminated(&self) -> usize {
        self.labels.iter().filter(|l| **l).count()
    }
}

fn contaminated_count(fraction: f64, size: usize) -> usize {
    // Guard against 0.1·100 landing a hair above 10.
    (fraction * size as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Removes `class` from training and assembles a test split holding
/// ⌈fraction·|test|⌉ samples of it, the rest drawn from other classes.
pub fn engineer_contamination(
    train_labels: &[ColorClass],
    test_labels: &[ColorClass],
    class: ColorClass,
    fraction: f64,
    test_size: Option<usize>,
    seed: u64,
) -> Result<ContaminationSplit> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid("fraction", format!("{fraction} outside (0, 1]")));
    }
    let train: Vec<usize> = (0..train_labels.len())
        .filter(|&i| train_labels[i] != class)
        .collect();
    if train.len() == train_labels.len() {
        return Err(Error::InsufficientData(format!(
            "training split has no `{class}` samples to remove"
        )));
    }
    if train.is_empty() {
        return Err(Error::InsufficientData(format!(
            "training split has nothing but `{class}`"
        )));
    }
    let (contam_pool, other_pool): (Vec<usize>, Vec<usize>) =
        (0..test_labels.len()).partition(|&i| test_labels[i] == class);
    if contam_pool.is_empty() || other_pool.is_empty() {
        return Err(Error::InsufficientData(format!(
            "test split needs both `{class}` and other samples ({} vs {})",
            contam_pool.len(),
            other_pool.len()
        )));
    }

    let size = match test_size {
        Some(t) => t,
        None => (1..=contam_pool.len() + other_pool.len())
            .rev()
            .find(|&t| {
                let k = contaminated_count(fraction, t);
                k <= contam_pool.len() && t - k <= other_pool.len()
            })
            .unwrap_or(0),
    };
    let k = contaminated_count(fraction, size);
    if size == 0 || k > contam_pool.len() || size - k > other_pool.len() {
        return Err(Error::InsufficientData(format!(
            "a test split of {size} at fraction {fraction} needs {k} `{class}` and {} other samples; \
             have {} and {}",
            size.saturating_sub(k),
            contam_pool.len(),
            other_pool.len()
        )));
    }

    let draw = |pool: &[usize], n: usize, stream: u64| -> Vec<usize> {
        let mut rng = rng::stream(seed, &[TAG_SPLIT, stream]);
        index::sample(&mut rng, pool.len(), n)
            .into_iter()
            .map(|j| pool[j])
            .collect()
    };
    let mut test: Vec<usize> = draw(&contam_pool, k, 0);
    test.extend(draw(&other_pool, size - k, 1));
    test.sort_unstable();
    let labels = test.iter().map(|&i| test_labels[i] == class).collect();
    Ok(ContaminationSplit { train, test, labels })
}

/// ROC-AUC via the Mann–Whitney U statistic with average ranks for ties:
/// P(score_pos > score_neg) + ½ P(tie).
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::shape(scores.len(), labels.len()));
    }
    let n_pos = labels.iter().filter(|l| **l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NonFinite(format!("score {i} is NaN")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their average.
        let avg = (i + j + 2) as f64 / 2.0;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k]).count();
        rank_sum_pos += avg * pos_in_group as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub scorer: ScorerKind,
    pub class: ColorClass,
    pub fraction: f64,
    pub mean_auc: f64,
    /// Sample standard deviation (n − 1); 0 for a single repeat.
    pub std_auc: f64,
    pub repeats: usize,
    /// Per-repeat AUCs, in repeat order.
    pub aucs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkTable {
    /// Human-readable table with `mean ± std` per row.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<12} {:<8} {:>8} {:>16} {:>7}\n",
            "scorer", "class", "fraction", "auc", "repeats"
        );
        for r in &self.rows {
            out += &format!(
                "{:<12} {:<8} {:>8.3} {:>16} {:>7}\n",
                r.scorer.as_str(),
                r.class.as_str(),
                r.fraction,
                format!("{:.3} ± {:.3}", r.mean_auc, r.std_auc),
                r.repeats
            );
        }
        out
    }
}

pub fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every (fraction, repeat, scorer) cell on precomputed embeddings.
///
/// Repeat r uses seed `spec.seed + r` for its test split and for the
/// isolation forest. Rows are ordered by fraction, then by the scorer order in
/// `spec`.
pub fn run_contamination_benchmark(
    train: &LatentMatrix,
    train_labels: &[ColorClass],
    test: &LatentMatrix,
    test_labels: &[ColorClass],
    spec: &ContaminationSpec,
) -> Result<BenchmarkTable> {
    spec.validate()?;
    if train.n_rows() != train_labels.len() {
        return Err(Error::shape(train.n_rows(), train_labels.len()));
    }
    if test.n_rows() != test_labels.len() {
        return Err(Error::shape(test.n_rows(), test_labels.len()));
    }

    let mut cells = Vec::new();
    for (fi, &fraction) in spec.fractions.iter().enumerate() {
        for r in 0..spec.repeats {
            for (si, &kind) in spec.scorers.iter().enumerate() {
                cells.push((fi, fraction, r, si, kind));
            }
        }
    }
    let aucs: Vec<f64> = cells
        .par_iter()
        .map(|&(_, fraction, r, _, kind)| {
            let seed = spec.seed.wrapping_add(r as u64);
            let context = |e: Error| {
                Error::Degenerate(format!("scorer {kind}, fraction {fraction}, repeat {r}: {e}"))
            };
            let split = engineer_contamination(
                train_labels,
                test_labels,
                spec.contamination_class,
                fraction,
                spec.test_size,
                seed,
            )?;
            let hyper = ScorerHyper {
                seed,
                ..spec.hyper.clone()
            };
            let model = scorers::fit(kind, &train.select_rows(&split.train), &hyper).map_err(context)?;
            let scores =
                scorers::novelty_scores(&model, &test.select_rows(&split.test)).map_err(context)?;
            roc_auc(&scores.novelty, &split.labels).map_err(context)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (fi, &fraction) in spec.fractions.iter().enumerate() {
        for (si, &kind) in spec.scorers.iter().enumerate() {
            let values: Vec<f64> = cells
                .iter()
                .zip(&aucs)
                .filter(|((f, _, _, s, _), _)| *f == fi && *s == si)
                .map(|(_, &a)| a)
                .collect();
            let (mean_auc, std_auc) = mean_and_sample_std(&values);
            rows.push(BenchmarkRow {
                scorer: kind,
                class: spec.contamination_class,
                fraction,
                mean_auc,
                std_auc,
                repeats: spec.repeats,
                aucs: values,
            });
        }
    }
    Ok(BenchmarkTable { rows })
}
