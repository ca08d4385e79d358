//! JSON pipeline config. Every field is optional; command-line flags win over
//! the file, and the file wins over built-in defaults.

use std::path::{Path, PathBuf};

use novelty_core::scorers::ScorerKind;
use novelty_core::synthgen::ColorClass;
use serde::Deserialize;

use crate::failure::CliResult;
use crate::formats;

pub const SEED_ENV: &str = "NOVELTY_EVAL_SEED";

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub paths: Paths,
    pub data: DataSection,
    pub train: TrainSection,
    pub scorer: ScorerSection,
    pub detector: Option<String>,
    pub evaluate: EvaluateSection,
    pub benchmark: BenchmarkSection,
    pub interpret: InterpretSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data: Option<PathBuf>,
    pub train_data: Option<PathBuf>,
    pub test_data: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub train_latent: Option<PathBuf>,
    pub latent: Option<PathBuf>,
    pub scorer: Option<PathBuf>,
    pub novelty: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub detections: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub n_per_class: Option<usize>,
    pub size: Option<usize>,
    pub exclude: Option<Vec<ColorClass>>,
    pub bulb_radius: Option<(f64, f64)>,
    pub background_brightness: Option<(f64, f64)>,
    pub blur_sigma: Option<(f64, f64)>,
    pub hue_shift: Option<(f64, f64)>,
    pub arrow_probability: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub paper_scale: Option<bool>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub beta: Option<f64>,
    pub latent_dim: Option<usize>,
    pub hidden_width: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerSection {
    pub kind: Option<ScorerKind>,
    pub bandwidth: Option<f64>,
    pub k: Option<usize>,
    pub n_bins: Option<usize>,
    pub n_trees: Option<usize>,
    pub subsample: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub iou_threshold: Option<f64>,
    pub windows: Option<usize>,
    pub bin_edges: Option<(f64, f64)>,
    pub per_bin: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    pub class: Option<ColorClass>,
    pub fractions: Option<Vec<f64>>,
    pub repeats: Option<usize>,
    pub scorers: Option<Vec<ScorerKind>>,
    pub test_size: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpretSection {
    pub n_dims: Option<usize>,
    pub steps: Option<usize>,
    pub range_sigmas: Option<f64>,
    pub mi_bins: Option<usize>,
    pub bin_edges: Option<(f64, f64)>,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => formats::read_json("config file", p),
        }
    }
}

/// Flag, then config, then the environment variable, then 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text.trim().parse().map_err(|_| {
            crate::failure::Failure::invalid(format!("{SEED_ENV}=`{text}` is not an unsigned integer"))
        }),
        Err(_) => Ok(0),
    }
}
