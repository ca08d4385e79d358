//! Novelty-weighted evaluation of object detectors.
//!
//! Test objects are embedded with a β-VAE encoder, scored for novelty against
//! the training embeddings, and the detector's per-object loss is averaged
//! with those novelty weights into a generalization score G ∈ [0, 1].
//!
//! Module map:
//! - [`synthgen`]: synthetic traffic-light crops with known factors
//! - [`vae`]: the representation learner (encoder means are the embedding)
//! - [`scorers`]: novelty scorers fit on training embeddings
//! - [`detect_eval`]: IoU matching and per-object losses
//! - [`genscore`]: G, novelty bins, balanced subsets, loss curves
//! - [`benchmark`]: contamination study with ROC-AUC
//! - [`interpret`]: mutual-information ranking and traversal exports

// `!(a < b)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod detect_eval;
pub mod error;
pub mod genscore;
pub mod interpret;
pub mod matrix;
pub mod rng;
pub mod scorers;
pub mod synthgen;
pub mod vae;

pub use error::{Error, Result};
pub use matrix::LatentMatrix;
