//! Detection accuracy: IoU, greedy matching, interpolated AP and mAP.
//!
//! The protocol follows the COCO bounding-box evaluation: greedy matching by
//! score, 101-point interpolated AP, IoU sweep 0.50:0.05:0.95, size buckets
//! applied by ignoring out-of-bucket ground truth.

mod ap;
mod iou;
mod matching;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{Dataset, DetectionSet};
use crate::model::{
    CategoryId, Detection, GroundTruthBox, ImageId, NetworkId, NetworkProfile, PerImageScore, ProfileKey,
    Score, SizeBucket,
};

pub use ap::{average_precision, ScoredFlag, RECALL_POINTS};
pub use iou::iou;
pub use matching::{match_detections, MatchResult};

use matching::{is_ignored, match_group};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("matching input spans more than one image or category")]
    MixedImage,
    #[error("detection set {0} references an image absent from the dataset")]
    ForeignDetections(NetworkId),
    #[error("IoU thresholds must be non-empty and within (0, 1]")]
    BadThresholds,
}

/// `0.50, 0.55, ..., 0.95`.
pub fn default_iou_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

/// Dataset-level accuracy of one detection set.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub map_overall: Score,
    /// Empty unless bucket evaluation was requested.
    pub bucket_maps: BTreeMap<SizeBucket, Score>,
    /// Mean AP over IoU thresholds, for categories with ground truth.
    pub per_class: BTreeMap<CategoryId, f64>,
}

impl EvalReport {
    pub fn bucket(&self, bucket: SizeBucket) -> Option<Score> {
        self.bucket_maps.get(&bucket).copied()
    }

    /// Profile row for this report. Undefined accuracies (no ground truth in
    /// that bucket) are written as 0.
    pub fn to_profile(&self, key: &ProfileKey, latency_ms: f64) -> NetworkProfile {
        let value = |s: Option<Score>| s.and_then(|s| s.value()).unwrap_or(0.0);
        NetworkProfile {
            model_name: key.model_name.clone(),
            backend: key.backend,
            batch_size: key.batch_size,
            latency_ms,
            map_overall: value(Some(self.map_overall)),
            map_small: value(self.bucket(SizeBucket::Small)),
            map_medium: value(self.bucket(SizeBucket::Medium)),
            map_large: value(self.bucket(SizeBucket::Large)),
            per_class_map: self.per_class.clone(),
        }
    }
}

fn check_thresholds(iou_thresholds: &[f64]) -> Result<(), EvalError> {
    if iou_thresholds.is_empty() || iou_thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(EvalError::BadThresholds);
    }
    Ok(())
}

type Groups<'a, T> = HashMap<(CategoryId, ImageId), Vec<&'a T>>;

struct Grouped<'a> {
    gts: Groups<'a, GroundTruthBox>,
    dets: Groups<'a, Detection>,
}

fn group<'a>(dataset: &'a Dataset, detset: &'a DetectionSet) -> Result<Grouped<'a>, EvalError> {
    let mut gts: Groups<GroundTruthBox> = HashMap::new();
    for g in dataset.ground_truth() {
        gts.entry((g.category_id, g.image_id)).or_default().push(g);
    }
    let mut dets: Groups<Detection> = HashMap::new();
    for d in &detset.detections {
        if !dataset.has_image(d.image_id) {
            return Err(EvalError::ForeignDetections(detset.network_id.clone()));
        }
        dets.entry((d.category_id, d.image_id)).or_default().push(d);
    }
    Ok(Grouped { gts, dets })
}

/// AP for one category over the given images at one threshold.
fn category_ap(
    grouped: &Grouped,
    category: CategoryId,
    images: &[ImageId],
    iou_threshold: f64,
    bucket: Option<SizeBucket>,
) -> Score {
    let mut flags = Vec::new();
    let mut positives = 0;
    for &image in images {
        let key = (category, image);
        let gts = grouped.gts.get(&key).map(Vec::as_slice).unwrap_or(&[]);
        let dets = grouped.dets.get(&key).map(Vec::as_slice).unwrap_or(&[]);
        positives += gts.iter().filter(|g| !is_ignored(g, bucket)).count();
        if dets.is_empty() {
            continue;
        }
        let m = match_group(dets, gts, iou_threshold, bucket);
        let mut scored: Vec<(usize, bool)> = m
            .pairs
            .iter()
            .map(|p| (p.0, true))
            .chain(m.unmatched_detections.iter().map(|&d| (d, false)))
            .collect();
        // keep the within-image rank order so equal scores tie-break by image, then rank
        scored.sort_by(|a, b| dets[b.0].score.total_cmp(&dets[a.0].score).then(a.0.cmp(&b.0)));
        flags.extend(scored.into_iter().map(|(d, tp)| ScoredFlag {
            score: dets[d].score,
            true_positive: tp,
        }));
    }
    average_precision(&flags, positives)
}

/// Mean AP over thresholds for every category with positives; `None` entries dropped.
fn class_maps(
    grouped: &Grouped,
    categories: &[CategoryId],
    images: &[ImageId],
    iou_thresholds: &[f64],
    bucket: Option<SizeBucket>,
) -> BTreeMap<CategoryId, f64> {
    categories
        .par_iter()
        .filter_map(|&cat| {
            let aps: Option<Vec<f64>> = iou_thresholds
                .iter()
                .map(|&t| category_ap(grouped, cat, images, t, bucket).value())
                .collect();
            aps.map(|v| (cat, v.iter().sum::<f64>() / v.len() as f64))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

fn mean_score(values: &BTreeMap<CategoryId, f64>) -> Score {
    if values.is_empty() {
        Score::NoGroundTruth
    } else {
        Score::Value(values.values().sum::<f64>() / values.len() as f64)
    }
}

/// Dataset-wide mAP: per category and threshold an AP over all images, then
/// the mean over thresholds per category, then the mean over categories that
/// have ground truth.
pub fn evaluate_dataset(
    dataset: &Dataset,
    detset: &DetectionSet,
    iou_thresholds: &[f64],
    buckets: bool,
) -> Result<EvalReport, EvalError> {
    check_thresholds(iou_thresholds)?;
    let grouped = group(dataset, detset)?;
    let images: Vec<ImageId> = dataset.images().iter().map(|i| i.id).collect();
    let categories: Vec<CategoryId> = dataset.categories().iter().map(|c| c.id).collect();

    let per_class = class_maps(&grouped, &categories, &images, iou_thresholds, None);
    let mut bucket_maps = BTreeMap::new();
    if buckets {
        for b in SizeBucket::ALL {
            let maps = class_maps(&grouped, &categories, &images, iou_thresholds, Some(b));
            bucket_maps.insert(b, mean_score(&maps));
        }
    }
    Ok(EvalReport {
        map_overall: mean_score(&per_class),
        bucket_maps,
        per_class,
    })
}

/// Per-image mAP: the same protocol restricted to one image, averaged over
/// the categories present in that image's (non-ignored) ground truth.
pub fn evaluate_per_image(
    dataset: &Dataset,
    detset: &DetectionSet,
    bucket: Option<SizeBucket>,
    latency_ms: f64,
) -> Result<Vec<PerImageScore>, EvalError> {
    let thresholds = default_iou_thresholds();
    let grouped = group(dataset, detset)?;
    let by_image = dataset.ground_truth_by_image();
    let scores = dataset
        .images()
        .par_iter()
        .map(|img| {
            let present: BTreeSet<CategoryId> = by_image
                .get(&img.id)
                .into_iter()
                .flatten()
                .filter(|g| !is_ignored(g, bucket))
                .map(|g| g.category_id)
                .collect();
            let categories: Vec<CategoryId> = present.into_iter().collect();
            let maps = class_maps(&grouped, &categories, &[img.id], &thresholds, bucket);
            PerImageScore {
                image_id: img.id,
                network_id: detset.network_id.clone(),
                score: mean_score(&maps),
                latency_ms,
            }
        })
        .collect();
    Ok(scores)
}

/// Report table: `network_id,map_overall,map_small,map_medium,map_large[,class:<id>...]`.
pub fn write_reports_to(rows: &[(NetworkId, EvalReport)], w: &mut impl Write) -> std::io::Result<()> {
    let classes: BTreeSet<CategoryId> = rows.iter().flat_map(|(_, r)| r.per_class.keys().copied()).collect();
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = ["network_id", "map_overall", "map_small", "map_medium", "map_large"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(classes.iter().map(|c| format!("class:{c}")));
    out.write_record(&header)?;
    for (id, r) in rows {
        let bucket = |b| r.bucket(b).map(|s| s.to_string()).unwrap_or_default();
        let mut row = vec![
            id.to_string(),
            r.map_overall.to_string(),
            bucket(SizeBucket::Small),
            bucket(SizeBucket::Medium),
            bucket(SizeBucket::Large),
        ];
        row.extend(
            classes
                .iter()
                .map(|c| r.per_class.get(c).map(|v| v.to_string()).unwrap_or_default()),
        );
        out.write_record(&row)?;
    }
    out.flush()
}
