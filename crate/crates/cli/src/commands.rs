use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::Args;
use log::info;
use novelty_core::benchmark::{run_contamination_benchmark, ContaminationSpec};
use novelty_core::detect_eval::{evaluate_dataset, ImageAnnotations, ImageDetections, StubDetector};
use novelty_core::genscore::{bin_by_novelty, bin_with_edges, build_report, loss_novelty_curve, NoveltyBins};
use novelty_core::interpret::{self, select_informative_dims, DEFAULT_MI_BINS};
use novelty_core::scorers::{self, ScorerHyper, ScorerKind, ScorerModel};
use novelty_core::synthgen::{generate_dataset, ColorClass, DatasetSpec, FactorRanges};
use novelty_core::vae::{self, TrainConfig, VaeParams};
use novelty_core::LatentMatrix;

use crate::config::PipelineConfig;
use crate::failure::{CliResult, Failure};
use crate::formats::{self, ANNOTATIONS_FILE, FACTORS_FILE};

/// Resolved global settings shared by every subcommand.
pub struct Context {
    pub config: PipelineConfig,
    pub seed: u64,
}

fn need(flag: &Option<PathBuf>, config: &Option<PathBuf>, name: &str) -> CliResult<PathBuf> {
    flag.clone().or_else(|| config.clone()).ok_or_else(|| Failure::unset(name))
}

fn parse_pair(text: &str) -> Result<(f64, f64), String> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got `{text}`"))?;
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
    Ok((parse(a)?, parse(b)?))
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Output directory (crops/, factors.csv, annotations.jsonl).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_per_class: Option<usize>,
    /// Crop edge length in pixels.
    #[arg(long)]
    size: Option<usize>,
    /// Colour classes to leave out, comma-separated.
    #[arg(long, value_delimiter = ',')]
    exclude_class: Vec<ColorClass>,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    bulb_radius_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    background_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    blur_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    hue_range: Option<(f64, f64)>,
    #[arg(long)]
    arrow_probability: Option<f64>,
}

pub fn gen_data(args: GenDataArgs, ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.config.data;
    let out = need(&args.out, &ctx.config.paths.data, "out")?;
    let defaults = FactorRanges::default();
    let spec = DatasetSpec {
        n_per_class: args.n_per_class.or(cfg.n_per_class).unwrap_or(100),
        size: args.size.or(cfg.size).unwrap_or(16),
        factor_ranges: FactorRanges {
            bulb_radius: args.bulb_radius_range.or(cfg.bulb_radius).unwrap_or(defaults.bulb_radius),
            background_brightness: args
                .background_range
                .or(cfg.background_brightness)
                .unwrap_or(defaults.background_brightness),
            blur_sigma: args.blur_range.or(cfg.blur_sigma).unwrap_or(defaults.blur_sigma),
            hue_shift: args.hue_range.or(cfg.hue_shift).unwrap_or(defaults.hue_shift),
            arrow_probability: args
                .arrow_probability
                .or(cfg.arrow_probability)
                .unwrap_or(defaults.arrow_probability),
        },
        exclude: if args.exclude_class.is_empty() {
            cfg.exclude.clone().unwrap_or_default()
        } else {
            args.exclude_class
        },
        seed: ctx.seed,
    };
    let data = generate_dataset(&spec)?;
    formats::write_dataset(&out, &data)?;
    println!("wrote {} crops to {}", data.len(), out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct TrainVaeArgs {
    /// Dataset directory to train on.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Where to write the params JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional CSV of per-epoch losses.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Colour classes to leave out of training, comma-separated.
    #[arg(long, value_delimiter = ',')]
    exclude_class: Vec<ColorClass>,
    /// Start from 750 epochs, lr 1e-4, d = 32 instead of the desk-scale defaults.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    hidden_width: Option<usize>,
}

pub fn train_vae(args: TrainVaeArgs, ctx: &Context) -> CliResult<()> {
    let paths = &ctx.config.paths;
    let cfg = &ctx.config.train;
    let data_dir = need(&args.data, &paths.train_data.clone().or(paths.data.clone()), "data")?;
    let out = need(&args.out, &paths.params, "out")?;
    let base = if args.paper_scale || cfg.paper_scale.unwrap_or(false) {
        TrainConfig::paper_scale()
    } else {
        TrainConfig::default()
    };
    let config = TrainConfig {
        epochs: args.epochs.or(cfg.epochs).unwrap_or(base.epochs),
        batch_size: args.batch_size.or(cfg.batch_size).unwrap_or(base.batch_size),
        learning_rate: args.learning_rate.or(cfg.learning_rate).unwrap_or(base.learning_rate),
        beta: args.beta.or(cfg.beta).unwrap_or(base.beta),
        latent_dim: args.latent_dim.or(cfg.latent_dim).unwrap_or(base.latent_dim),
        hidden_width: args.hidden_width.or(cfg.hidden_width).unwrap_or(base.hidden_width),
        seed: ctx.seed,
    };
    config.validate()?;

    let data = formats::read_dataset(&data_dir)?;
    let crops: Vec<_> = data
        .crops
        .into_iter()
        .zip(&data.factors)
        .filter(|(_, f)| !args.exclude_class.contains(&f.color_class))
        .map(|(c, _)| c)
        .collect();
    info!("training on {} crops for {} epochs", crops.len(), config.epochs);
    let outcome = vae::train(&crops, &config)?;
    formats::write_json(&out, &outcome.params)?;
    if let Some(path) = args.history {
        let mut text = String::from("epoch,reconstruction,kl,total\n");
        for (e, l) in outcome.history.iter().enumerate() {
            text += &format!("{},{},{},{}\n", e + 1, l.reconstruction, l.kl, l.total);
        }
        formats::write_bytes(&path, text.as_bytes())?;
    }
    let first = outcome.history.first().map_or(f64::NAN, |l| l.total);
    let last = outcome.history.last().map_or(f64::NAN, |l| l.total);
    println!("trained on {} crops: loss {first:.4} -> {last:.4}; params at {}", crops.len(), out.display());
    Ok(())
}

fn read_params(path: &Path) -> CliResult<VaeParams> {
    let params: VaeParams = formats::read_json("VAE params", path)?;
    params
        .validate()
        .map_err(|e| Failure::from(e).context(path.display()))?;
    Ok(params)
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Latent CSV to write (id,z0,...).
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn encode(args: EncodeArgs, ctx: &Context) -> CliResult<()> {
    let paths = &ctx.config.paths;
    let params = read_params(&need(&args.params, &paths.params, "params")?)?;
    let data = formats::read_dataset(&need(&args.data, &paths.data, "data")?)?;
    let out = need(&args.out, &paths.latent, "out")?;
    let z = vae::embed_dataset(&params, &data.crops)?;
    formats::write_latent(&out, &data.ids, &z)?;
    println!("encoded {} crops into {} dims at {}", z.n_rows(), z.n_cols(), out.display());
    Ok(())
}

/// Scorer hyperparameter flags shared by fit-scorer and benchmark.
#[derive(Debug, Args)]
pub struct HyperArgs {
    /// KDE bandwidth (Scott's rule when unset).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Neighbour count for LOF and kNN.
    #[arg(long)]
    k: Option<usize>,
    /// HBOS histogram bins.
    #[arg(long)]
    n_bins: Option<usize>,
    /// Isolation-forest tree count.
    #[arg(long)]
    n_trees: Option<usize>,
    /// Isolation-forest subsample size.
    #[arg(long)]
    subsample: Option<usize>,
}

impl HyperArgs {
    fn resolve(&self, ctx: &Context) -> ScorerHyper {
        let cfg = &ctx.config.scorer;
        let d = ScorerHyper::default();
        ScorerHyper {
            bandwidth: self.bandwidth.or(cfg.bandwidth),
            k: self.k.or(cfg.k),
            n_bins: self.n_bins.or(cfg.n_bins).unwrap_or(d.n_bins),
            n_trees: self.n_trees.or(cfg.n_trees).unwrap_or(d.n_trees),
            subsample: self.subsample.or(cfg.subsample).unwrap_or(d.subsample),
            seed: ctx.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitScorerArgs {
    /// Training latent CSV.
    #[arg(long)]
    latent: Option<PathBuf>,
    #[arg(long)]
    scorer: Option<ScorerKind>,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Where to write the fitted scorer JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn fit_scorer(args: FitScorerArgs, ctx: &Context) -> CliResult<()> {
    let paths = &ctx.config.paths;
    let (_, z) = formats::read_latent(&need(&args.latent, &paths.train_latent, "latent")?)?;
    let out = need(&args.out, &paths.scorer, "out")?;
    let kind = args.scorer.or(ctx.config.scorer.kind).unwrap_or(ScorerKind::Kde);
    let model = scorers::fit(kind, &z, &args.hyper.resolve(ctx))?;
    formats::write_json(&out, &model)?;
    println!("fit {} on {} rows; model at {}", kind.as_str(), z.n_rows(), out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Fitted scorer JSON from fit-scorer.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Test latent CSV.
    #[arg(long)]
    latent: Option<PathBuf>,
    /// Scores CSV to write (id,raw,novelty).
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn score(args: ScoreArgs, ctx: &Context) -> CliResult<()> {
    let paths = &ctx.config.paths;
    let model: ScorerModel = formats::read_json("scorer model", &need(&args.model, &paths.scorer, "model")?)?;
    let (ids, z) = formats::read_latent(&need(&args.latent, &paths.latent, "latent")?)?;
    let out = need(&args.out, &paths.novelty, "out")?;
    let scores = scorers::novelty_scores(&model, &z)?;
    formats::write_scores(&out, &ids, &scores)?;
    println!("scored {} rows with {}; scores at {}", ids.len(), model.kind().as_str(), out.display());
    Ok(())
}

/// Bulb radius per object id, from a factors file when one is available.
fn bulb_radii(factors: Option<&Path>) -> CliResult<HashMap<String, f64>> {
    let Some(path) = factors else {
        return Ok(HashMap::new());
    };
    let (ids, factors) = formats::read_factors(path)?;
    Ok(ids.into_iter().zip(factors.iter().map(|f| f.bulb_radius)).collect())
}

fn run_stub(spec: &str, annotations: &[ImageAnnotations], factors: Option<&Path>, seed: u64) -> CliResult<Vec<ImageDetections>> {
    let detector = StubDetector::parse(spec, seed)?;
    let radii = bulb_radii(factors)?;
    Ok(detector.detect(annotations, |id| radii.get(id).copied())?)
}

/// Annotations and factors default to the files inside `--data`.
fn dataset_file(explicit: &Option<PathBuf>, config: &Option<PathBuf>, data: &Option<PathBuf>, name: &str) -> Option<PathBuf> {
    explicit
        .clone()
        .or_else(|| config.clone())
        .or_else(|| data.as_ref().map(|d| d.join(name)))
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Dataset directory providing annotations.jsonl and factors.csv.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Factors CSV used for bulb-size dependent noise.
    #[arg(long)]
    factors: Option<PathBuf>,
    /// Detector spec, e.g. `stub:noise=0.02,drop=0.05`.
    #[arg(long)]
    detector: Option<String>,
    /// Detections JSONL to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn detect(args: DetectArgs, ctx: &Context) -> CliResult<()> {
    let paths = &ctx.config.paths;
    let data = args.data.clone().or(paths.data.clone());
    let ann_path = dataset_file(&args.annotations, &paths.annotations, &data, ANNOTATIONS_FILE)
        .ok_or_else(|| Failure::unset("annotations"))?;
    let factors = args.factors.clone().or_else(|| data.as_ref().map(|d| d.join(FACTORS_FILE)));
    if let Some(f) = &args.factors {
        formats::require("factors file", f)?;
    }
    let spec = args
        .detector
        .or(ctx.config.detector.clone())
        .ok_or_else(|| Failure::unset("detector"))?;
    let out = need(&args.out, &paths.detections, "out")?;
    let annotations: Vec<ImageAnnotations> = formats::read_jsonl("annotations", &ann_path)?;
    let detections = run_stub(&spec, &annotations, factors.as_deref().filter(|p| p.exists()), ctx.seed)?;
    formats::write_jsonl(&out, &detections)?;
    let n: usize = detections.iter().map(|d| d.detections.len()).sum();
    println!("wrote {n} detections for {} images to {}", detections.len(), out.display());
    Ok(())
}

fn novelty_bins(novelty: &[f64], edges: Option<(f64, f64)>) -> CliResult<NoveltyBins> {
    Ok(match edges {
        Some((lo, hi)) => bin_with_edges(novelty, [lo, hi])?,
        None => bin_by_novelty(novelty)?,
    })
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset directory providing annotations.jsonl and factors.csv.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Detections JSONL produced by a detector.
    #[arg(long, conflicts_with = "detector")]
    detections: Option<PathBuf>,
    /// Synthesize detections instead, e.g. `stub:noise=0.02`.
    #[arg(long)]
    detector: Option<String>,
    #[arg(long)]
    factors: Option<PathBuf>,
    /// Scores CSV from `score`.
    #[arg(long)]
    novelty: Option<PathBuf>,
    #[arg(long)]
    iou_threshold: Option<f64>,
    /// Equal-count windows in curve.csv.
    #[arg(long)]
    windows: Option<usize>,
    /// Manual low/medium and medium/high novelty edges instead of tertiles.
    #[arg(long, value_parser = parse_pair)]
    bin_edges: Option<(f64, f64)>,
    /// Also report G on this many objects sampled from each novelty bin.
    #[arg(long)]
    per_bin: Option<usize>,
    /// Output directory for report.json, curve.csv and objects.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn evaluate(args: EvaluateArgs, ctx: &Context) -> CliResult<()> {
    let paths = &ctx.config.paths;
    let cfg = &ctx.config.evaluate;
    let data = args.data.clone().or(paths.data.clone());
    let ann_path = dataset_file(&args.annotations, &paths.annotations, &data, ANNOTATIONS_FILE)
        .ok_or_else(|| Failure::unset("annotations"))?;
    let novelty_path = need(&args.novelty, &paths.novelty, "novelty")?;
    let out = need(&args.out, &paths.out, "out")?;
    let annotations: Vec<ImageAnnotations> = formats::read_jsonl("annotations", &ann_path)?;
    let scores = formats::read_scores(&novelty_path)?;

    let detector = args.detector.clone().or_else(|| {
        // A config-level detector only applies when no detections file was given.
        args.detections.is_none().then(|| ctx.config.detector.clone()).flatten()
    });
    let detections = match (detector, &args.detections) {
        (Some(spec), _) => {
            let factors = args.factors.clone().or_else(|| data.as_ref().map(|d| d.join(FACTORS_FILE)));
            if let Some(f) = &args.factors {
                formats::require("factors file", f)?;
            }
            run_stub(&spec, &annotations, factors.as_deref().filter(|p| p.exists()), ctx.seed)?
        }
        (None, det) => {
            let path = need(det, &paths.detections, "detections")?;
            formats::read_jsonl("detections", &path)?
        }
    };

    let threshold = args.iou_threshold.or(cfg.iou_threshold).unwrap_or(0.5);
    let eval = evaluate_dataset(&annotations, &detections, threshold)?;

    let index: HashMap<&str, usize> = scores.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut novelty = Vec::with_capacity(eval.losses.len());
    for l in &eval.losses {
        match index.get(l.object_id.as_str()) {
            Some(&i) => novelty.push(scores.novelty[i]),
            None => {
                return Err(Failure::invalid(format!(
                    "object `{}` in {} has no novelty score in {}",
                    l.object_id,
                    ann_path.display(),
                    novelty_path.display()
                )))
            }
        }
    }
    if scores.ids.len() != eval.losses.len() {
        let annotated: std::collections::HashSet<&str> = eval.losses.iter().map(|l| l.object_id.as_str()).collect();
        let orphan = scores.ids.iter().find(|id| !annotated.contains(id.as_str())).expect("sizes differ");
        return Err(Failure::invalid(format!(
            "novelty id `{orphan}` in {} matches no annotated object in {}",
            novelty_path.display(),
            ann_path.display()
        )));
    }
    let losses: Vec<f64> = eval.losses.iter().map(|l| l.loss).collect();

    let bins = novelty_bins(&novelty, args.bin_edges.or(cfg.bin_edges))?;
    let per_bin = args.per_bin.or(cfg.per_bin);
    let report = build_report(
        &novelty,
        &losses,
        eval.accuracy,
        eval.n_false_positives,
        &bins,
        per_bin.map(|p| (p, ctx.seed)),
    )?;
    let windows = args.windows.or(cfg.windows).unwrap_or(10);
    let curve = loss_novelty_curve(&novelty, &losses, windows)?;

    formats::create_dir(&out)?;
    formats::write_json(&out.join("report.json"), &report)?;
    formats::write_curve(&out.join("curve.csv"), &curve)?;
    let mut objects = String::from("id,novelty,loss,detected\n");
    for (l, nov) in eval.losses.iter().zip(&novelty) {
        objects += &format!("{},{},{},{}\n", l.object_id, nov, l.loss, l.detected);
    }
    formats::write_bytes(&out.join("objects.csv"), objects.as_bytes())?;
    println!(
        "G = {:.4} (1 - mean loss = {:.4}, accuracy = {:.4}) over {} objects; report at {}",
        report.g_score,
        report.unweighted_complement,
        report.accuracy,
        report.n_objects,
        out.join("report.json").display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Training dataset; must still contain the contamination class.
    #[arg(long)]
    train_data: Option<PathBuf>,
    #[arg(long)]
    test_data: Option<PathBuf>,
    /// Trained VAE used to embed both splits.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Contamination colour removed from training.
    #[arg(long)]
    class: Option<ColorClass>,
    /// Contamination fractions of the test split, comma-separated.
    #[arg(long, value_delimiter = ',')]
    fractions: Vec<f64>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Scorers to compare, comma-separated.
    #[arg(long, value_delimiter = ',')]
    scorers: Vec<ScorerKind>,
    /// Engineered test split size (largest possible when unset).
    #[arg(long)]
    test_size: Option<usize>,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Benchmark CSV to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional JSON with per-repeat AUCs.
    #[arg(long)]
    details: Option<PathBuf>,
}

pub fn benchmark(args: BenchmarkArgs, ctx: &Context) -> CliResult<()> {
    let paths = &ctx.config.paths;
    let cfg = &ctx.config.benchmark;
    let params = read_params(&need(&args.params, &paths.params, "params")?)?;
    let train = formats::read_dataset(&need(&args.train_data, &paths.train_data, "train-data")?)?;
    let test = formats::read_dataset(&need(&args.test_data, &paths.test_data, "test-data")?)?;
    let out = args
        .out
        .clone()
        .or_else(|| paths.out.as_ref().map(|d| d.join("benchmark.csv")))
        .ok_or_else(|| Failure::unset("out"))?;
    let defaults = ContaminationSpec::default();
    let spec = ContaminationSpec {
        contamination_class: args.class.or(cfg.class).unwrap_or(defaults.contamination_class),
        fractions: if args.fractions.is_empty() {
            cfg.fractions.clone().unwrap_or(defaults.fractions)
        } else {
            args.fractions.clone()
        },
        repeats: args.repeats.or(cfg.repeats).unwrap_or(defaults.repeats),
        scorers: if args.scorers.is_empty() {
            cfg.scorers.clone().unwrap_or(defaults.scorers)
        } else {
            args.scorers.clone()
        },
        test_size: args.test_size.or(cfg.test_size),
        hyper: args.hyper.resolve(ctx),
        seed: ctx.seed,
    };
    spec.validate()?;
    let z_train = vae::embed_dataset(&params, &train.crops)?;
    let z_test = vae::embed_dataset(&params, &test.crops)?;
    let table = run_contamination_benchmark(&z_train, &train.labels(), &z_test, &test.labels(), &spec)?;
    formats::write_benchmark(&out, &table)?;
    if let Some(path) = &args.details {
        formats::write_json(path, &table)?;
    }
    print!("{}", table.render());
    Ok(())
}

#[derive(Debug, Args)]
pub struct InterpretArgs {
    #[arg(long)]
    params: Option<PathBuf>,
    /// Training latent CSV; its mean is the traversal base point.
    #[arg(long)]
    train_latent: Option<PathBuf>,
    /// Test latent CSV, aligned with the novelty scores by id.
    #[arg(long)]
    latent: Option<PathBuf>,
    #[arg(long)]
    novelty: Option<PathBuf>,
    /// Number of top-ranked dimensions to traverse and export.
    #[arg(long)]
    n_dims: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    /// Traverse mean ± this many standard deviations.
    #[arg(long)]
    range_sigmas: Option<f64>,
    /// Equal-frequency bins for the MI estimate.
    #[arg(long)]
    mi_bins: Option<usize>,
    #[arg(long, value_parser = parse_pair)]
    bin_edges: Option<(f64, f64)>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Reorders `z` rows to follow `ids`; any id present on one side only is an error.
fn align_rows(z_ids: &[String], z: &LatentMatrix, ids: &[String], z_path: &Path, ids_path: &Path) -> CliResult<LatentMatrix> {
    let index: HashMap<&str, usize> = z_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut rows = Vec::with_capacity(ids.len());
    for id in ids {
        match index.get(id.as_str()) {
            Some(&i) => rows.push(i),
            None => {
                return Err(Failure::invalid(format!(
                    "id `{id}` in {} is missing from {}",
                    ids_path.display(),
                    z_path.display()
                )))
            }
        }
    }
    if z_ids.len() != ids.len() {
        let known: std::collections::HashSet<&str> = ids.iter().map(String::as_str).collect();
        let orphan = z_ids.iter().find(|id| !known.contains(id.as_str())).expect("sizes differ");
        return Err(Failure::invalid(format!(
            "id `{orphan}` in {} is missing from {}",
            z_path.display(),
            ids_path.display()
        )));
    }
    Ok(z.select_rows(&rows))
}

pub fn interpret(args: InterpretArgs, ctx: &Context) -> CliResult<()> {
    let paths = &ctx.config.paths;
    let cfg = &ctx.config.interpret;
    let params = read_params(&need(&args.params, &paths.params, "params")?)?;
    let (_, z_train) = formats::read_latent(&need(&args.train_latent, &paths.train_latent, "train-latent")?)?;
    let latent_path = need(&args.latent, &paths.latent, "latent")?;
    let novelty_path = need(&args.novelty, &paths.novelty, "novelty")?;
    let out = need(&args.out, &paths.out, "out")?;
    let (z_ids, z) = formats::read_latent(&latent_path)?;
    let scores = formats::read_scores(&novelty_path)?;
    let z = align_rows(&z_ids, &z, &scores.ids, &latent_path, &novelty_path)?;

    let bins = novelty_bins(&scores.novelty, args.bin_edges.or(cfg.bin_edges))?;
    let mi_bins = args.mi_bins.or(cfg.mi_bins).unwrap_or(DEFAULT_MI_BINS);
    let ranking = select_informative_dims(&z, &bins, mi_bins)?;
    let n_dims = args.n_dims.or(cfg.n_dims).unwrap_or(3).min(params.latent_dim);
    let steps = args.steps.or(cfg.steps).unwrap_or(7);
    let range_sigmas = args.range_sigmas.or(cfg.range_sigmas).unwrap_or(2.0);

    formats::create_dir(&out)?;
    let manifest =
        interpret::export_traversal_grid(&params, &z_train, &ranking, n_dims, steps, range_sigmas, &out)?;
    formats::write_json(&out.join("mi.json"), &ranking)?;
    let mut csv = Vec::new();
    interpret::export_parallel_coordinates(&mut csv, &scores.ids, &z, &scores.novelty, &ranking, n_dims)?;
    formats::write_bytes(&out.join("parallel_coordinates.csv"), &csv)?;
    for m in &manifest {
        println!("z{:<3} MI {:.4}  {}", m.dim, m.mi, out.join(&m.file).display());
    }
    Ok(())
}
