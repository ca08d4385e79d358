//! Matching of detector output against ground truth and per-object losses.
//!
//! A prediction is a true positive when it overlaps an unmatched ground-truth
//! box with IoU ≥ the threshold (0.5 by default). Ground-truth objects left
//! unmatched are false negatives and are scored as a prediction with
//! confidence 0, i.e. the maximal loss of 1. False positives have no object
//! (and so no novelty weight) and never receive a loss.

use std::collections::{BTreeMap, HashSet};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Axis-aligned box in normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BoundingBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        for (name, v) in [("x1", x1), ("y1", y1), ("x2", x2), ("y2", y2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid("box", format!("{name}={v} outside [0, 1]")));
            }
        }
        if x1 >= x2 || y1 >= y2 {
            return Err(Error::invalid(
                "box",
                format!("[{x1}, {y1}, {x2}, {y2}] needs x1 < x2 and y1 < y2"),
            ));
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn area(&self) -> f64 {
        (self.x2 - self.x1) * (self.y2 - self.y1)
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = Error;

    fn try_from(c: [f64; 4]) -> Result<Self> {
        Self::new(c[0], c[1], c[2], c[3])
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        b.coords()
    }
}

/// Ground-truth object inside one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    pub object_id: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
}

/// One predicted box with its confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedBox {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub confidence: f64,
}

/// All ground truth of one image; one JSONL record of `annotations.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageAnnotations {
    pub image_id: String,
    pub objects: Vec<GroundTruthObject>,
}

/// All predictions for one image; one JSONL record of `detections.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageDetections {
    pub image_id: String,
    pub detections: Vec<PredictedBox>,
}

/// Flat ground-truth annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub image_id: String,
    pub object_id: String,
    pub bbox: BoundingBox,
}

/// Flat detection.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: String,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

impl Detection {
    pub fn new(image_id: impl Into<String>, bbox: BoundingBox, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::invalid(
                "confidence",
                format!("{confidence} outside [0, 1]"),
            ));
        }
        Ok(Self {
            image_id: image_id.into(),
            bbox,
            confidence,
        })
    }
}

/// Groups flat annotations into per-image records, ordered by image id.
pub fn group_annotations(annotations: &[Annotation]) -> Vec<ImageAnnotations> {
    let mut by_image: BTreeMap<&str, Vec<GroundTruthObject>> = BTreeMap::new();
    for a in annotations {
        by_image.entry(&a.image_id).or_default().push(GroundTruthObject {
            object_id: a.object_id.clone(),
            bbox: a.bbox,
        });
    }
    by_image
        .into_iter()
        .map(|(image_id, objects)| ImageAnnotations {
            image_id: image_id.to_string(),
            objects,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruePositive {
    pub object_id: String,
    /// Index into the image's detection list.
    pub detection: usize,
    pub iou: f64,
}

/// Outcome of matching one image.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatchResult {
    pub tp: Vec<TruePositive>,
    pub fp: Vec<usize>,
    #[serde(rename = "fn")]
    pub fn_: Vec<String>,
}

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let w = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let h = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = w * h;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Greedy matching of one image's detections to its ground truth.
///
/// Detections are visited in descending confidence (ties by list order). Each
/// one claims the unmatched object with the highest IoU, ties going to the
/// lexicographically lower object id, provided that IoU reaches `threshold`.
pub fn match_detections(
    objects: &[GroundTruthObject],
    detections: &[PredictedBox],
    threshold: f64,
) -> Result<MatchResult> {
    let mut seen = HashSet::new();
    for o in objects {
        if !seen.insert(o.object_id.as_str()) {
            return Err(Error::DuplicateId(o.object_id.clone()));
        }
    }

    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .confidence
            .total_cmp(&detections[a].confidence)
            .then(a.cmp(&b))
    });

    let mut taken = vec![false; objects.len()];
    let mut result = MatchResult::default();
    for di in order {
        let det = &detections[di];
        let mut best: Option<(usize, f64)> = None;
        for (oi, obj) in objects.iter().enumerate() {
            if taken[oi] {
                continue;
            }
            let v = iou(&obj.bbox, &det.bbox);
            best = match best {
                None => Some((oi, v)),
                Some((bi, bv)) => {
                    if v > bv || (v == bv && obj.object_id < objects[bi].object_id) {
                        Some((oi, v))
                    } else {
                        Some((bi, bv))
                    }
                }
            };
        }
        match best {
            Some((oi, v)) if v >= threshold => {
                taken[oi] = true;
                result.tp.push(TruePositive {
                    object_id: objects[oi].object_id.clone(),
                    detection: di,
                    iou: v,
                });
            }
            _ => result.fp.push(di),
        }
    }
    result.fn_ = objects
        .iter()
        .zip(&taken)
        .filter(|(_, &t)| !t)
        .map(|(o, _)| o.object_id.clone())
        .collect();
    Ok(result)
}

/// Loss of one ground-truth object.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectLoss {
    pub object_id: String,
    pub loss: f64,
    pub detected: bool,
}

/// Mean absolute error between two boxes' normalized coordinates.
pub fn box_mae(a: &BoundingBox, b: &BoundingBox) -> f64 {
    a.coords()
        .iter()
        .zip(b.coords())
        .map(|(p, q)| (p - q).abs())
        .sum::<f64>()
        / 4.0
}

/// Per-object loss in [0, 1], in the order of `objects`.
///
/// True positives score the box MAE; false negatives score 1.
pub fn detection_loss(
    matched: &MatchResult,
    objects: &[GroundTruthObject],
    detections: &[PredictedBox],
) -> Vec<ObjectLoss> {
    objects
        .iter()
        .map(|obj| {
            match matched.tp.iter().find(|tp| tp.object_id == obj.object_id) {
                Some(tp) => ObjectLoss {
                    object_id: obj.object_id.clone(),
                    loss: box_mae(&obj.bbox, &detections[tp.detection].bbox).clamp(0.0, 1.0),
                    detected: true,
                },
                None => ObjectLoss {
                    object_id: obj.object_id.clone(),
                    loss: 1.0,
                    detected: false,
                },
            }
        })
        .collect()
}

/// Fraction of ground-truth objects detected: TP / (TP + FN).
pub fn accuracy(matches: &[MatchResult]) -> Result<f64> {
    let tp: usize = matches.iter().map(|m| m.tp.len()).sum();
    let fn_: usize = matches.iter().map(|m| m.fn_.len()).sum();
    if tp + fn_ == 0 {
        return Err(Error::InsufficientData(
            "accuracy needs at least one ground-truth object".into(),
        ));
    }
    Ok(tp as f64 / (tp + fn_) as f64)
}

/// Dataset-level matching outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetEvaluation {
    /// One entry per ground-truth object, ordered by image id then object order.
    pub losses: Vec<ObjectLoss>,
    pub accuracy: f64,
    pub n_true_positives: usize,
    pub n_false_negatives: usize,
    pub n_false_positives: usize,
}

/// Matches every image and collects losses in image-id order.
///
/// Detections for images without ground truth count as false positives.
pub fn evaluate_dataset(
    annotations: &[ImageAnnotations],
    detections: &[ImageDetections],
    threshold: f64,
) -> Result<DatasetEvaluation> {
    let mut gt: BTreeMap<&str, &[GroundTruthObject]> = BTreeMap::new();
    for rec in annotations {
        if gt.insert(&rec.image_id, &rec.objects).is_some() {
            return Err(Error::DuplicateId(rec.image_id.clone()));
        }
    }
    let mut preds: BTreeMap<&str, &[PredictedBox]> = BTreeMap::new();
    for rec in detections {
        if preds.insert(&rec.image_id, &rec.detections).is_some() {
            return Err(Error::DuplicateId(rec.image_id.clone()));
        }
    }

    let mut object_ids = HashSet::new();
    let mut losses = Vec::new();
    let mut matches = Vec::with_capacity(gt.len());
    for (image_id, objects) in &gt {
        let dets = preds.get(image_id).copied().unwrap_or(&[]);
        let m = match_detections(objects, dets, threshold)?;
        for l in detection_loss(&m, objects, dets) {
            if !object_ids.insert(l.object_id.clone()) {
                return Err(Error::DuplicateId(l.object_id));
            }
            losses.push(l);
        }
        matches.push(m);
    }
    let orphan_fp: usize = preds
        .iter()
        .filter(|(id, _)| !gt.contains_key(*id))
        .map(|(_, d)| d.len())
        .sum();

    Ok(DatasetEvaluation {
        losses,
        accuracy: accuracy(&matches)?,
        n_true_positives: matches.iter().map(|m| m.tp.len()).sum(),
        n_false_negatives: matches.iter().map(|m| m.fn_.len()).sum(),
        n_false_positives: matches.iter().map(|m| m.fp.len()).sum::<usize>() + orphan_fp,
    })
}

/// Synthetic detector that jitters ground-truth boxes.
///
/// Stands in for a trained CNN so the evaluation path runs end to end. Each
/// object is dropped with probability `drop`; otherwise every coordinate gets
/// Gaussian noise with standard deviation `noise`, plus `large_noise` for
/// objects whose bulb radius exceeds `large_threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubDetector {
    pub noise: f64,
    pub drop: f64,
    pub large_noise: f64,
    pub large_threshold: f64,
    pub seed: u64,
}

impl Default for StubDetector {
    fn default() -> Self {
        Self {
            noise: 0.01,
            drop: 0.0,
            large_noise: 0.0,
            large_threshold: 0.3,
            seed: 0,
        }
    }
}

impl StubDetector {
    /// Parses `stub:noise=0.02,drop=0.05,large_noise=0.05,large_threshold=0.3`.
    pub fn parse(spec: &str, seed: u64) -> Result<Self> {
        let rest = spec
            .strip_prefix("stub")
            .ok_or_else(|| Error::invalid("detector", format!("unknown detector `{spec}`")))?;
        let mut det = StubDetector {
            seed,
            ..Default::default()
        };
        let rest = rest.strip_prefix(':').unwrap_or(rest);
        for kv in rest.split(',').filter(|s| !s.is_empty()) {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::invalid("detector", format!("expected key=value, got `{kv}`")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::invalid("detector", format!("`{value}` is not a number")))?;
            match key.trim() {
                "noise" => det.noise = v,
                "drop" => det.drop = v,
                "large_noise" => det.large_noise = v,
                "large_threshold" => det.large_threshold = v,
                other => {
                    return Err(Error::invalid("detector", format!("unknown option `{other}`")))
                }
            }
        }
        det.validate()?;
        Ok(det)
    }

    fn validate(&self) -> Result<()> {
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid("noise", "must be finite and >= 0"));
        }
        if !(self.large_noise >= 0.0 && self.large_noise.is_finite()) {
            return Err(Error::invalid("large_noise", "must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.drop) {
            return Err(Error::invalid("drop", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Produces detections for every annotated image. `bulb_radius` maps an
    /// object id to its generative bulb radius, when known.
    pub fn detect<F>(&self, annotations: &[ImageAnnotations], bulb_radius: F) -> Result<Vec<ImageDetections>>
    where
        F: Fn(&str) -> Option<f64>,
    {
        self.validate()?;
        let mut out = Vec::with_capacity(annotations.len());
        for (ii, rec) in annotations.iter().enumerate() {
            let mut detections = Vec::new();
            for (oi, obj) in rec.objects.iter().enumerate() {
                let mut rng = rng::stream(self.seed, &[0x00DE_7EC7, ii as u64, oi as u64]);
                let u: f64 = rand::Rng::random(&mut rng);
                if u < self.drop {
                    continue;
                }
                let large = bulb_radius(&obj.object_id).is_some_and(|r| r > self.large_threshold);
                let sigma = self.noise + if large { self.large_noise } else { 0.0 };
                let normal = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
                let c = obj.bbox.coords();
                let mut j: [f64; 4] = [0.0; 4];
                for (k, v) in j.iter_mut().enumerate() {
                    *v = (c[k] + normal.sample(&mut rng)).clamp(0.0, 1.0);
                }
                let confidence = 0.5 + 0.5 * rand::Rng::random::<f64>(&mut rng);
                if let Some(bbox) = valid_box(j) {
                    detections.push(PredictedBox { bbox, confidence });
                }
            }
            out.push(ImageDetections {
                image_id: rec.image_id.clone(),
                detections,
            });
        }
        Ok(out)
    }
}

fn valid_box(c: [f64; 4]) -> Option<BoundingBox> {
    let (x1, x2) = (c[0].min(c[2]), c[0].max(c[2]));
    let (y1, y2) = (c[1].min(c[3]), c[1].max(c[3]));
    BoundingBox::new(x1, y1, x2, y2).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(c: [f64; 4]) -> BoundingBox {
        BoundingBox::try_from(c).unwrap()
    }

    fn gt(id: &str, c: [f64; 4]) -> GroundTruthObject {
        GroundTruthObject {
            object_id: id.into(),
            bbox: bb(c),
        }
    }

    fn pred(c: [f64; 4], confidence: f64) -> PredictedBox {
        PredictedBox {
            bbox: bb(c),
            confidence,
        }
    }

    #[test]
    fn box_validation() {
        assert!(BoundingBox::new(0.5, 0.0, 0.5, 1.0).is_err());
        assert!(BoundingBox::new(0.0, 0.0, 1.1, 1.0).is_err());
        assert!(serde_json::from_str::<BoundingBox>("[0.2,0.2,0.1,0.3]").is_err());
        let b: BoundingBox = serde_json::from_str("[0.1,0.2,0.3,0.4]").unwrap();
        assert_eq!(serde_json::to_string(&b).unwrap(), "[0.1,0.2,0.3,0.4]");
    }

    #[test]
    fn iou_basic_cases() {
        let a = bb([0.0, 0.0, 0.2, 0.2]);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bb([0.5, 0.5, 0.6, 0.6])), 0.0);
        let b = bb([0.1, 0.0, 0.3, 0.2]);
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_perfect_match() {
        let objs = [gt("a", [0.1, 0.1, 0.3, 0.3])];
        let m = match_detections(&objs, &[pred([0.1, 0.1, 0.3, 0.3], 0.9)], 0.5).unwrap();
        assert_eq!((m.tp.len(), m.fp.len(), m.fn_.len()), (1, 0, 0));
    }

    #[test]
    fn missing_detection_is_false_negative() {
        let objs = [gt("a", [0.1, 0.1, 0.3, 0.3])];
        let m = match_detections(&objs, &[], 0.5).unwrap();
        assert_eq!(m.fn_, vec!["a".to_string()]);
        let losses = detection_loss(&m, &objs, &[]);
        assert_eq!(losses[0].loss, 1.0);
    }

    #[test]
    fn higher_confidence_wins() {
        // IoU 0.6 for the confident detection, 0.7 for the other.
        let objs = [gt("a", [0.0, 0.0, 0.5, 0.5])];
        let d_hi = pred([0.0, 0.0, 0.5, 0.3], 0.9);
        let d_lo = pred([0.0, 0.0, 0.5, 0.35], 0.8);
        assert!((iou(&objs[0].bbox, &d_hi.bbox) - 0.6).abs() < 1e-12);
        assert!((iou(&objs[0].bbox, &d_lo.bbox) - 0.7).abs() < 1e-12);
        let m = match_detections(&objs, &[d_lo, d_hi], 0.5).unwrap();
        assert_eq!(m.tp.len(), 1);
        assert_eq!(m.tp[0].detection, 1);
        assert_eq!(m.fp, vec![0]);
    }

    #[test]
    fn iou_ties_go_to_lower_object_id() {
        let objs = [gt("b", [0.0, 0.0, 0.4, 0.4]), gt("a", [0.0, 0.0, 0.4, 0.4])];
        let m = match_detections(&objs, &[pred([0.0, 0.0, 0.4, 0.4], 0.5)], 0.5).unwrap();
        assert_eq!(m.tp[0].object_id, "a");
        assert_eq!(m.fn_, vec!["b".to_string()]);
    }

    #[test]
    fn duplicate_object_ids_rejected() {
        let objs = [gt("a", [0.0, 0.0, 0.4, 0.4]), gt("a", [0.5, 0.5, 0.6, 0.6])];
        assert!(matches!(
            match_detections(&objs, &[], 0.5),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn mae_loss_example() {
        let objs = [gt("a", [0.1, 0.1, 0.5, 0.5])];
        let dets = [pred([0.2, 0.1, 0.5, 0.5], 0.9)];
        let m = match_detections(&objs, &dets, 0.5).unwrap();
        let l = detection_loss(&m, &objs, &dets);
        assert!((l[0].loss - 0.025).abs() < 1e-15);

        let perfect = [pred([0.1, 0.1, 0.5, 0.5], 0.9)];
        let m = match_detections(&objs, &perfect, 0.5).unwrap();
        assert_eq!(detection_loss(&m, &objs, &perfect)[0].loss, 0.0);
    }

    #[test]
    fn accuracy_counts() {
        let tp = |id: &str| TruePositive {
            object_id: id.into(),
            detection: 0,
            iou: 1.0,
        };
        let all = MatchResult {
            tp: vec![tp("a"), tp("b")],
            ..Default::default()
        };
        assert_eq!(accuracy(&[all]).unwrap(), 1.0);
        let none = MatchResult {
            fn_: vec!["a".into()],
            ..Default::default()
        };
        assert_eq!(accuracy(&[none]).unwrap(), 0.0);
        let mixed = MatchResult {
            tp: vec![tp("a"), tp("b"), tp("c")],
            fn_: vec!["d".into()],
            ..Default::default()
        };
        assert_eq!(accuracy(&[mixed]).unwrap(), 0.75);
        assert!(accuracy(&[]).is_err());
    }

    #[test]
    fn dataset_evaluation_counts_orphan_detections() {
        let anns = vec![ImageAnnotations {
            image_id: "0".into(),
            objects: vec![gt("0", [0.1, 0.1, 0.3, 0.3])],
        }];
        let dets = vec![
            ImageDetections {
                image_id: "0".into(),
                detections: vec![pred([0.1, 0.1, 0.3, 0.3], 0.9)],
            },
            ImageDetections {
                image_id: "9".into(),
                detections: vec![pred([0.1, 0.1, 0.3, 0.3], 0.9)],
            },
        ];
        let ev = evaluate_dataset(&anns, &dets, 0.5).unwrap();
        assert_eq!(ev.n_true_positives, 1);
        assert_eq!(ev.n_false_positives, 1);
        assert_eq!(ev.accuracy, 1.0);
    }

    #[test]
    fn stub_parsing_and_determinism() {
        let det = StubDetector::parse("stub:noise=0.02,drop=0.1", 3).unwrap();
        assert_eq!(det.noise, 0.02);
        assert_eq!(det.drop, 0.1);
        assert!(StubDetector::parse("yolo", 0).is_err());
        assert!(StubDetector::parse("stub:noise=-1", 0).is_err());
        assert!(StubDetector::parse("stub:color=1", 0).is_err());

        let anns: Vec<_> = (0..20)
            .map(|i| ImageAnnotations {
                image_id: i.to_string(),
                objects: vec![gt(&i.to_string(), [0.3, 0.3, 0.55, 0.55])],
            })
            .collect();
        let a = det.detect(&anns, |_| None).unwrap();
        let b = det.detect(&anns, |_| None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stub_noise_free_reproduces_ground_truth() {
        let det = StubDetector::parse("stub:noise=0", 1).unwrap();
        let anns = vec![ImageAnnotations {
            image_id: "x".into(),
            objects: vec![gt("x", [0.3, 0.3, 0.55, 0.55])],
        }];
        let d = det.detect(&anns, |_| None).unwrap();
        assert_eq!(d[0].detections[0].bbox, anns[0].objects[0].bbox);
    }
}
