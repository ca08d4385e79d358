//! On-disk formats. Numeric CSVs are written by hand with Rust's shortest
//! round-trip float formatting so a value re-read and re-written keeps its
//! exact bytes; reading goes through the `csv` crate.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use novelty_core::benchmark::BenchmarkTable;
use novelty_core::genscore::CurvePoint;
use novelty_core::scorers::NoveltyScores;
use novelty_core::synthgen::{ColorClass, CropFactors, ImageCrop, Inlay, SyntheticDataset};
use novelty_core::LatentMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::failure::{CliResult, Failure};

pub const FACTORS_FILE: &str = "factors.csv";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const CROPS_DIR: &str = "crops";

pub fn require(what: &str, path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::missing(what, path))
    }
}

pub fn read_bytes(what: &str, path: &Path) -> CliResult<Vec<u8>> {
    require(what, path)?;
    fs::read(path).map_err(|e| Failure::io(path, e))
}

pub fn read_text(what: &str, path: &Path) -> CliResult<String> {
    require(what, path)?;
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::io(path, e))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| Failure::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(what: &str, path: &Path) -> CliResult<T> {
    let text = read_text(what, path)?;
    serde_json::from_str(&text).map_err(|e| Failure::parse(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::io(path, e))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_jsonl<T: DeserializeOwned>(what: &str, path: &Path) -> CliResult<Vec<T>> {
    let text = read_text(what, path)?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Failure::parse(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> CliResult<()> {
    let mut text = String::new();
    for r in records {
        text += &serde_json::to_string(r).map_err(|e| Failure::io(path, e))?;
        text.push('\n');
    }
    write_bytes(path, text.as_bytes())
}

fn csv_reader(what: &str, path: &Path) -> CliResult<csv::Reader<fs::File>> {
    require(what, path)?;
    csv::Reader::from_path(path).map_err(|e| Failure::io(path, e))
}

fn check_id(path: &Path, id: &str) -> CliResult<()> {
    if id.is_empty() || id.contains([',', '"', '\n', '\r']) {
        return Err(Failure::invalid(format!(
            "{}: id `{id}` must be non-empty and free of commas, quotes and newlines",
            path.display()
        )));
    }
    Ok(())
}

fn check_unique(path: &Path, ids: &[String]) -> CliResult<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Failure::invalid(format!("{}: duplicate id `{id}`", path.display())));
        }
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct FactorRecord {
    id: String,
    color_class: ColorClass,
    bulb_radius: f64,
    background_brightness: f64,
    blur_sigma: f64,
    inlay: Inlay,
    hue_shift: f64,
}

pub fn write_factors(path: &Path, ids: &[String], factors: &[CropFactors]) -> CliResult<()> {
    let mut out = String::from("id,color_class,bulb_radius,background_brightness,blur_sigma,inlay,hue_shift\n");
    for (id, f) in ids.iter().zip(factors) {
        writeln!(
            out,
            "{id},{},{},{},{},{},{}",
            f.color_class.as_str(),
            f.bulb_radius,
            f.background_brightness,
            f.blur_sigma,
            f.inlay.as_str(),
            f.hue_shift
        )
        .expect("writing to a String cannot fail");
    }
    write_bytes(path, out.as_bytes())
}

pub fn read_factors(path: &Path) -> CliResult<(Vec<String>, Vec<CropFactors>)> {
    let mut reader = csv_reader("factors file", path)?;
    let mut ids = Vec::new();
    let mut factors = Vec::new();
    for (i, rec) in reader.deserialize::<FactorRecord>().enumerate() {
        let rec = rec.map_err(|e| Failure::parse(path, format!("row {}: {e}", i + 1)))?;
        check_id(path, &rec.id)?;
        let f = CropFactors {
            color_class: rec.color_class,
            bulb_radius: rec.bulb_radius,
            background_brightness: rec.background_brightness,
            blur_sigma: rec.blur_sigma,
            inlay: rec.inlay,
            hue_shift: rec.hue_shift,
        };
        f.validate()
            .map_err(|e| Failure::from(e).context(format!("{} row {}", path.display(), i + 1)))?;
        ids.push(rec.id);
        factors.push(f);
    }
    check_unique(path, &ids)?;
    Ok((ids, factors))
}

pub fn crop_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(CROPS_DIR).join(format!("{id}.ppm"))
}

/// Writes crops/{id}.ppm, factors.csv and annotations.jsonl.
pub fn write_dataset(dir: &Path, data: &SyntheticDataset) -> CliResult<()> {
    create_dir(&dir.join(CROPS_DIR))?;
    for (id, crop) in data.ids.iter().zip(&data.crops) {
        write_bytes(&crop_path(dir, id), &crop.to_ppm())?;
    }
    write_factors(&dir.join(FACTORS_FILE), &data.ids, &data.factors)?;
    let grouped = novelty_core::detect_eval::group_annotations(&data.annotations);
    write_jsonl(&dir.join(ANNOTATIONS_FILE), &grouped)
}

pub struct LoadedDataset {
    pub ids: Vec<String>,
    pub factors: Vec<CropFactors>,
    pub crops: Vec<ImageCrop>,
}

impl LoadedDataset {
    pub fn labels(&self) -> Vec<ColorClass> {
        self.factors.iter().map(|f| f.color_class).collect()
    }
}

/// Loads a dataset directory in factors.csv row order.
pub fn read_dataset(dir: &Path) -> CliResult<LoadedDataset> {
    require("dataset directory", dir)?;
    let (ids, factors) = read_factors(&dir.join(FACTORS_FILE))?;
    let crops = ids
        .iter()
        .map(|id| {
            let path = crop_path(dir, id);
            let bytes = read_bytes("crop image", &path)?;
            ImageCrop::from_ppm(&bytes).map_err(|e| Failure::from(e).context(path.display()))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(LoadedDataset { ids, factors, crops })
}

pub fn write_latent(path: &Path, ids: &[String], z: &LatentMatrix) -> CliResult<()> {
    let mut out = String::from("id");
    for j in 0..z.n_cols() {
        write!(out, ",z{j}").unwrap();
    }
    out.push('\n');
    for (id, row) in ids.iter().zip(z.rows()) {
        out += id;
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

fn parse_f64(path: &Path, row: usize, column: &str, text: &str) -> CliResult<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| Failure::parse(path, format!("row {row}, column {column}: `{text}` is not a number")))?;
    if !v.is_finite() {
        return Err(Failure::parse(path, format!("row {row}, column {column}: non-finite value")));
    }
    Ok(v)
}

pub fn read_latent(path: &Path) -> CliResult<(Vec<String>, LatentMatrix)> {
    let mut reader = csv_reader("latent matrix", path)?;
    let headers = reader.headers().map_err(|e| Failure::parse(path, e))?.clone();
    if headers.get(0) != Some("id") || headers.len() < 2 {
        return Err(Failure::parse(path, "expected header `id,z0,...`"));
    }
    let d = headers.len() - 1;
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Failure::parse(path, e))?;
        check_id(path, &rec[0])?;
        ids.push(rec[0].to_string());
        for j in 0..d {
            data.push(parse_f64(path, i + 1, &headers[j + 1], &rec[j + 1])?);
        }
    }
    check_unique(path, &ids)?;
    let z = LatentMatrix::new(ids.len(), d, data)?;
    Ok((ids, z))
}

#[derive(Debug)]
pub struct ScoreTable {
    pub ids: Vec<String>,
    pub raw: Vec<f64>,
    pub novelty: Vec<f64>,
}

pub fn write_scores(path: &Path, ids: &[String], scores: &NoveltyScores) -> CliResult<()> {
    let mut out = String::from("id,raw,novelty\n");
    for (i, id) in ids.iter().enumerate() {
        writeln!(out, "{id},{},{}", scores.raw[i], scores.novelty[i]).unwrap();
    }
    write_bytes(path, out.as_bytes())
}

pub fn read_scores(path: &Path) -> CliResult<ScoreTable> {
    let mut reader = csv_reader("novelty scores", path)?;
    let headers = reader.headers().map_err(|e| Failure::parse(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "raw", "novelty"] {
        return Err(Failure::parse(path, "expected header `id,raw,novelty`"));
    }
    let mut table = ScoreTable {
        ids: Vec::new(),
        raw: Vec::new(),
        novelty: Vec::new(),
    };
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Failure::parse(path, e))?;
        check_id(path, &rec[0])?;
        table.ids.push(rec[0].to_string());
        table.raw.push(parse_f64(path, i + 1, "raw", &rec[1])?);
        let nov = parse_f64(path, i + 1, "novelty", &rec[2])?;
        if !(0.0..=1.0).contains(&nov) {
            return Err(Failure::parse(path, format!("row {}: novelty {nov} outside [0, 1]", i + 1)));
        }
        table.novelty.push(nov);
    }
    check_unique(path, &table.ids)?;
    Ok(table)
}

pub fn write_curve(path: &Path, curve: &[CurvePoint]) -> CliResult<()> {
    let mut out = String::from("window_mid_novelty,mean_loss\n");
    for p in curve {
        writeln!(out, "{},{}", p.window_mid_novelty, p.mean_loss).unwrap();
    }
    write_bytes(path, out.as_bytes())
}

pub fn write_benchmark(path: &Path, table: &BenchmarkTable) -> CliResult<()> {
    let mut out = String::from("scorer,class,fraction,mean_auc,std_auc,repeats\n");
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.scorer.as_str(),
            r.class.as_str(),
            r.fraction,
            r.mean_auc,
            r.std_auc,
            r.repeats
        )
        .unwrap();
    }
    write_bytes(path, out.as_bytes())
}
