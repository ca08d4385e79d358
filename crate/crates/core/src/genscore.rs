//! Generalization score G and novelty-stratified views of the loss.
//!
//! G = Σ novelty_i · (1 − L_i) / Σ novelty_i, so a low loss on highly novel
//! objects counts for more than a low loss on familiar ones. Less novel
//! objects are down-weighted, never discarded.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

const TAG_BALANCED: u64 = 0xBA1A;

pub fn generalization_score(novelty: &[f64], losses: &[f64]) -> Result<f64> {
    if novelty.len() != losses.len() {
        return Err(Error::shape(novelty.len(), losses.len()));
    }
    if novelty.is_empty() {
        return Err(Error::InsufficientData("no objects to score".into()));
    }
    if let Some(v) = novelty.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::invalid("novelty", format!("weight {v} must be finite and >= 0")));
    }
    if let Some(l) = losses.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::invalid("loss", format!("{l} outside [0, 1]")));
    }
    let total: f64 = novelty.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("degenerate novelty weights: they sum to 0".into()));
    }
    let weighted: f64 = novelty.iter().zip(losses).map(|(w, l)| w * (1.0 - l)).sum();
    Ok((weighted / total).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoveltyLevel {
    Low,
    Medium,
    High,
}

impl NoveltyLevel {
    pub const ALL: [NoveltyLevel; 3] = [NoveltyLevel::Low, NoveltyLevel::Medium, NoveltyLevel::High];

    pub fn as_str(self) -> &'static str {
        match self {
            NoveltyLevel::Low => "low",
            NoveltyLevel::Medium => "medium",
            NoveltyLevel::High => "high",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyBins {
    pub labels: Vec<NoveltyLevel>,
    /// Upper edges of the low and medium bins; values equal to an edge fall
    /// into the lower bin.
    pub edges: [f64; 2],
    /// Set when fewer than three distinct values were binned.
    pub degenerate: bool,
}

impl NoveltyBins {
    pub fn members(&self, level: NoveltyLevel) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == level)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count(&self, level: NoveltyLevel) -> usize {
        self.labels.iter().filter(|l| **l == level).count()
    }
}

/// Linear-interpolation empirical quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Tertile binning at the 1/3 and 2/3 empirical quantiles.
pub fn bin_by_novelty(novelty: &[f64]) -> Result<NoveltyBins> {
    if novelty.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "binning needs at least 3 objects, got {}",
            novelty.len()
        )));
    }
    let mut sorted = novelty.to_vec();
    sorted.sort_by(f64::total_cmp);
    let edges = [quantile(&sorted, 1.0 / 3.0), quantile(&sorted, 2.0 / 3.0)];
    bin_with_edges(novelty, edges)
}

/// Bins with caller-supplied edges.
pub fn bin_with_edges(novelty: &[f64], edges: [f64; 2]) -> Result<NoveltyBins> {
    if !(edges[0] <= edges[1]) {
        return Err(Error::invalid("edges", format!("{edges:?} must be non-decreasing")));
    }
    let labels = novelty
        .iter()
        .map(|&v| {
            if v <= edges[0] {
                NoveltyLevel::Low
            } else if v <= edges[1] {
                NoveltyLevel::Medium
            } else {
                NoveltyLevel::High
            }
        })
        .collect();
    let mut distinct = novelty.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let degenerate = distinct.len() < 3;
    if degenerate {
        log::warn!("novelty has only {} distinct values; bins are degenerate", distinct.len());
    }
    Ok(NoveltyBins {
        labels,
        edges,
        degenerate,
    })
}

/// Draws up to `per_bin` objects from each bin without replacement.
///
/// Returns object indices grouped low, medium, high; ascending within a bin.
pub fn sample_balanced(bins: &NoveltyBins, per_bin: usize, seed: u64) -> Result<Vec<usize>> {
    if per_bin == 0 {
        return Err(Error::invalid("per_bin", "must be >= 1"));
    }
    let mut out = Vec::new();
    for (bi, level) in NoveltyLevel::ALL.into_iter().enumerate() {
        let members = bins.members(level);
        let take = per_bin.min(members.len());
        let mut rng = rng::stream(seed, &[TAG_BALANCED, bi as u64]);
        let mut chosen: Vec<usize> = index::sample(&mut rng, members.len(), take)
            .into_iter()
            .map(|k| members[k])
            .collect();
        chosen.sort_unstable();
        out.extend(chosen);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Midpoint of the novelty range covered by the window.
    pub window_mid_novelty: f64,
    pub mean_loss: f64,
}

/// Mean loss in equal-count windows of ascending novelty.
pub fn loss_novelty_curve(novelty: &[f64], losses: &[f64], windows: usize) -> Result<Vec<CurvePoint>> {
    if novelty.len() != losses.len() {
        return Err(Error::shape(novelty.len(), losses.len()));
    }
    if novelty.is_empty() {
        return Err(Error::InsufficientData("no objects for the curve".into()));
    }
    if windows == 0 {
        return Err(Error::invalid("windows", "must be >= 1"));
    }
    let n = novelty.len();
    let w = windows.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| novelty[a].total_cmp(&novelty[b]).then(a.cmp(&b)));
    Ok((0..w)
        .map(|k| {
            let window = &order[k * n / w..(k + 1) * n / w];
            let first = novelty[window[0]];
            let last = novelty[window[window.len() - 1]];
            CurvePoint {
                window_mid_novelty: 0.5 * (first + last),
                mean_loss: window.iter().map(|&i| losses[i]).sum::<f64>() / window.len() as f64,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub count: usize,
    /// `None` for an empty bin.
    pub mean_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerBin {
    pub high: BinSummary,
    pub medium: BinSummary,
    pub low: BinSummary,
}

/// G computed on a balanced per-bin subsample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancedScore {
    pub per_bin: usize,
    pub n_objects: usize,
    pub g_score: f64,
    pub unweighted_complement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub g_score: f64,
    /// 1 − mean(L), the score without novelty weighting.
    pub unweighted_complement: f64,
    pub accuracy: f64,
    pub n_objects: usize,
    pub n_false_positives: usize,
    pub bin_edges: [f64; 2],
    pub degenerate_bins: bool,
    pub per_bin: PerBin,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balanced: Option<BalancedScore>,
}

/// Assembles the report from aligned novelty weights and losses.
///
/// `balanced`, when given as (per_bin, seed), adds G on a balanced subsample.
pub fn build_report(
    novelty: &[f64],
    losses: &[f64],
    accuracy: f64,
    n_false_positives: usize,
    bins: &NoveltyBins,
    balanced: Option<(usize, u64)>,
) -> Result<GeneralizationReport> {
    if bins.labels.len() != novelty.len() {
        return Err(Error::shape(novelty.len(), bins.labels.len()));
    }
    let g_score = generalization_score(novelty, losses)?;
    let unweighted_complement = 1.0 - losses.iter().sum::<f64>() / losses.len() as f64;
    let summary = |level| {
        let members = bins.members(level);
        BinSummary {
            count: members.len(),
            mean_loss: (!members.is_empty())
                .then(|| members.iter().map(|&i| losses[i]).sum::<f64>() / members.len() as f64),
        }
    };
    let balanced = match balanced {
        None => None,
        Some((per_bin, seed)) => {
            let subset = sample_balanced(bins, per_bin, seed)?;
            let nov: Vec<f64> = subset.iter().map(|&i| novelty[i]).collect();
            let los: Vec<f64> = subset.iter().map(|&i| losses[i]).collect();
            Some(BalancedScore {
                per_bin,
                n_objects: subset.len(),
                g_score: generalization_score(&nov, &los)?,
                unweighted_complement: 1.0 - los.iter().sum::<f64>() / los.len() as f64,
            })
        }
    };
    Ok(GeneralizationReport {
        g_score,
        unweighted_complement,
        accuracy,
        n_objects: novelty.len(),
        n_false_positives,
        bin_edges: bins.edges,
        degenerate_bins: bins.degenerate,
        per_bin: PerBin {
            high: summary(NoveltyLevel::High),
            medium: summary(NoveltyLevel::Medium),
            low: summary(NoveltyLevel::Low),
        },
        balanced,
    })
}
