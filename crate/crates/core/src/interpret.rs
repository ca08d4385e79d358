//! Which latent dimensions separate high- from low-novelty objects, and what
//! do they look like when swept?

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genscore::{NoveltyBins, NoveltyLevel};
use crate::matrix::LatentMatrix;
use crate::synthgen::ImageCrop;
use crate::vae::{self, VaeParams};

pub const DEFAULT_MI_BINS: usize = 10;

/// Plug-in mutual information (nats) between an equal-frequency
/// discretization of `column` and a binary label.
///
/// Bin edges are the order statistics sorted[⌈kN/B⌉ − 1] for k = 1..B−1; a
/// value lands in the bin numbered by how many edges lie strictly below it,
/// so ties never straddle a boundary.
pub fn mutual_information(column: &[f64], labels: &[bool], n_bins: usize) -> Result<f64> {
    let n = column.len();
    if labels.len() != n {
        return Err(Error::shape(n, labels.len()));
    }
    if n_bins < 2 {
        return Err(Error::invalid("n_bins", "must be >= 2"));
    }
    if n < 2 * n_bins {
        return Err(Error::InsufficientData(format!(
            "{n} values cannot fill {n_bins} bins (need at least {})",
            2 * n_bins
        )));
    }
    if let Some(i) = column.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("column value {i}")));
    }
    let n_pos = labels.iter().filter(|l| **l).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::SingleClass);
    }

    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (1..n_bins).map(|k| sorted[(k * n).div_ceil(n_bins) - 1]).collect();
    let mut table = vec![[0usize; 2]; n_bins];
    for (&v, &l) in column.iter().zip(labels) {
        let b = edges.partition_point(|&e| e < v);
        table[b][l as usize] += 1;
    }

    let nf = n as f64;
    let label_p = [(n - n_pos) as f64 / nf, n_pos as f64 / nf];
    let mut mi = 0.0;
    for row in &table {
        let bin_p = (row[0] + row[1]) as f64 / nf;
        for (l, &count) in row.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let joint = count as f64 / nf;
            mi += joint * (joint / (bin_p * label_p[l])).ln();
        }
    }
    // Rounding can leave a constant column at -1e-17.
    Ok(mi.max(0.0))
}

/// Per-dimension MI against the high-vs-low novelty label, plus the
/// dimensions sorted by descending MI (lower index first on ties).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiRanking {
    pub mi: Vec<f64>,
    pub order: Vec<usize>,
}

impl MiRanking {
    pub fn from_mi(mi: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..mi.len()).collect();
        order.sort_by(|&a, &b| mi[b].total_cmp(&mi[a]).then(a.cmp(&b)));
        Self { mi, order }
    }

    pub fn top(&self, k: usize) -> &[usize] {
        &self.order[..k.min(self.order.len())]
    }
}

/// Ranks the columns of `z` by how well they separate the high bin (label 1)
/// from the low bin (label 0). Medium-bin rows are left out.
pub fn select_informative_dims(z: &LatentMatrix, bins: &NoveltyBins, n_bins: usize) -> Result<MiRanking> {
    if bins.labels.len() != z.n_rows() {
        return Err(Error::shape(z.n_rows(), bins.labels.len()));
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, level) in bins.labels.iter().enumerate() {
        match level {
            NoveltyLevel::High => labels.push(true),
            NoveltyLevel::Low => labels.push(false),
            NoveltyLevel::Medium => continue,
        }
        rows.push(i);
    }
    for level in [NoveltyLevel::High, NoveltyLevel::Low] {
        if bins.count(level) == 0 {
            return Err(Error::InsufficientData(format!("the {} novelty bin is empty", level.as_str())));
        }
    }
    let mi = (0..z.n_cols())
        .into_par_iter()
        .map(|j| {
            let column: Vec<f64> = rows.iter().map(|&i| z.row(i)[j]).collect();
            mutual_information(&column, &labels, n_bins)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MiRanking::from_mi(mi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraversalStrip {
    pub dim: usize,
    pub mi: f64,
    pub values: Vec<f64>,
    pub tiles: Vec<ImageCrop>,
}

/// Sweeps each of the top `n_dims` dimensions over mean ± `range_sigmas`·std
/// of that dimension in `train_z`, holding the rest at the training mean.
pub fn traversal_grid(
    params: &VaeParams,
    train_z: &LatentMatrix,
    ranking: &MiRanking,
    n_dims: usize,
    steps: usize,
    range_sigmas: f64,
) -> Result<Vec<TraversalStrip>> {
    if train_z.n_cols() != params.latent_dim {
        return Err(Error::shape(params.latent_dim, train_z.n_cols()));
    }
    if ranking.mi.len() != params.latent_dim {
        return Err(Error::shape(params.latent_dim, ranking.mi.len()));
    }
    if train_z.n_rows() == 0 {
        return Err(Error::InsufficientData("no training embeddings for the traversal base".into()));
    }
    if n_dims == 0 || n_dims > params.latent_dim {
        return Err(Error::invalid(
            "n_dims",
            format!("{n_dims} outside 1..={}", params.latent_dim),
        ));
    }
    if !(range_sigmas.is_finite() && range_sigmas >= 0.0) {
        return Err(Error::invalid("range_sigmas", format!("{range_sigmas} must be finite and >= 0")));
    }
    let base = train_z.column_means();
    let stds = train_z.column_stds();
    ranking
        .top(n_dims)
        .iter()
        .map(|&dim| {
            let (lo, hi) = (
                base[dim] - range_sigmas * stds[dim],
                base[dim] + range_sigmas * stds[dim],
            );
            Ok(TraversalStrip {
                dim,
                mi: ranking.mi[dim],
                values: vae::traversal_values(lo, hi, steps),
                tiles: vae::traverse(params, &base, dim, lo, hi, steps)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub dim: usize,
    pub mi: f64,
    pub values: Vec<f64>,
    pub file: String,
}

pub fn strip_file_name(dim: usize) -> String {
    format!("traversal_dim{dim:02}.ppm")
}

/// Writes one PPM strip per traversed dimension and `manifest.json` into
/// `out_dir`, returning the manifest.
pub fn export_traversal_grid(
    params: &VaeParams,
    train_z: &LatentMatrix,
    ranking: &MiRanking,
    n_dims: usize,
    steps: usize,
    range_sigmas: f64,
    out_dir: &Path,
) -> Result<Vec<ManifestEntry>> {
    let strips = traversal_grid(params, train_z, ranking, n_dims, steps, range_sigmas)?;
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = Vec::with_capacity(strips.len());
    for strip in strips {
        let file = strip_file_name(strip.dim);
        std::fs::write(out_dir.join(&file), ImageCrop::hstack(&strip.tiles)?.to_ppm())?;
        manifest.push(ManifestEntry {
            dim: strip.dim,
            mi: strip.mi,
            values: strip.values,
            file,
        });
    }
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    std::fs::write(out_dir.join("manifest.json"), json)?;
    Ok(manifest)
}

/// CSV `id,novelty,z{dim}...` over the top `n_dims` ranked dimensions.
/// Floats use Rust's shortest round-trip formatting, the same as every other
/// CSV this crate's tools write.
pub fn export_parallel_coordinates<W: Write>(
    mut out: W,
    ids: &[String],
    z: &LatentMatrix,
    novelty: &[f64],
    ranking: &MiRanking,
    n_dims: usize,
) -> Result<()> {
    if ids.len() != z.n_rows() {
        return Err(Error::shape(z.n_rows(), ids.len()));
    }
    if novelty.len() != z.n_rows() {
        return Err(Error::shape(z.n_rows(), novelty.len()));
    }
    let dims = ranking.top(n_dims);
    if let Some(&bad) = dims.iter().find(|&&d| d >= z.n_cols()) {
        return Err(Error::invalid("ranking", format!("dimension {bad} beyond d = {}", z.n_cols())));
    }
    write!(out, "id,novelty")?;
    for d in dims {
        write!(out, ",z{d}")?;
    }
    writeln!(out)?;
    for (i, id) in ids.iter().enumerate() {
        write!(out, "{id},{}", novelty[i])?;
        let row = z.row(i);
        for &d in dims {
            write!(out, ",{}", row[d])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genscore::bin_with_edges;

    #[test]
    fn perfect_dependence_is_ln2() {
        let labels: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let column: Vec<f64> = labels.iter().map(|&l| l as u8 as f64).collect();
        let mi = mutual_information(&column, &labels, 2).unwrap();
        assert!((mi - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn constant_column_is_zero() {
        let labels: Vec<bool> = (0..40).map(|i| i < 13).collect();
        assert_eq!(mutual_information(&[3.5; 40], &labels, 10).unwrap(), 0.0);
    }

    #[test]
    fn mi_errors() {
        let labels = vec![true; 30];
        assert!(matches!(mutual_information(&[0.0; 30], &labels, 10), Err(Error::SingleClass)));
        let labels: Vec<bool> = (0..10).map(|i| i < 5).collect();
        assert!(matches!(
            mutual_information(&[0.0; 10], &labels, 10),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn identical_columns_tie_to_lower_index() {
        let ranking = MiRanking::from_mi(vec![0.1, 0.4, 0.4, 0.2]);
        assert_eq!(ranking.order, vec![1, 2, 3, 0]);
        assert_eq!(ranking.top(2), &[1, 2]);
        assert_eq!(ranking.top(9).len(), 4);
    }

    #[test]
    fn medium_bin_is_ignored_and_empty_bins_rejected() {
        let novelty: Vec<f64> = (0..60).map(|i| i as f64 / 59.0).collect();
        let rows: Vec<Vec<f64>> = novelty.iter().enumerate().map(|(i, &v)| vec![v, (i % 2) as f64, 0.3]).collect();
        let z = LatentMatrix::from_rows(&rows).unwrap();
        let bins = bin_with_edges(&novelty, [0.33, 0.66]).unwrap();
        let ranking = select_informative_dims(&z, &bins, 4).unwrap();
        assert_eq!(ranking.order, vec![0, 1, 2]);
        assert_eq!(ranking.mi[2], 0.0);

        let no_high = bin_with_edges(&novelty, [0.5, 2.0]).unwrap();
        assert!(select_informative_dims(&z, &no_high, 4).is_err());
    }

    #[test]
    fn parallel_coordinates_layout() {
        let z = LatentMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.5, 6.0]]).unwrap();
        let ranking = MiRanking::from_mi(vec![0.0, 0.5, 0.2]);
        let mut buf = Vec::new();
        let ids = vec!["a".to_string(), "b".to_string()];
        export_parallel_coordinates(&mut buf, &ids, &z, &[0.1, 1.0], &ranking, 2).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "id,novelty,z1,z2\na,0.1,2,3\nb,1,5.5,6\n");
    }
}
