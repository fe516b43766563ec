use crate::model::{area_bucket, Detection, GroundTruthBox, SizeBucket};

use super::iou::iou;
use super::EvalError;

/// Outcome of matching one (image, category) group at one IoU threshold.
///
/// Indices refer to the input slices. Every detection and every ground-truth
/// index lands in exactly one field.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchResult {
    /// True positives: (detection, ground truth, IoU).
    pub pairs: Vec<(usize, usize, f64)>,
    /// False positives.
    pub unmatched_detections: Vec<usize>,
    /// False negatives among non-ignored ground truth.
    pub unmatched_ground_truth: Vec<usize>,
    /// Detections absorbed by an ignored box; neither TP nor FP.
    pub ignored_detections: Vec<usize>,
    /// Crowd, explicitly ignored, or out-of-bucket ground truth.
    pub ignored_ground_truth: Vec<usize>,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.pairs.len()
    }

    pub fn false_positives(&self) -> usize {
        self.unmatched_detections.len()
    }

    pub fn false_negatives(&self) -> usize {
        self.unmatched_ground_truth.len()
    }
}

pub(crate) fn is_ignored(gt: &GroundTruthBox, bucket: Option<SizeBucket>) -> bool {
    gt.ignored || bucket.is_some_and(|b| area_bucket(&gt.bbox) != b)
}

/// Greedy score-ordered matching for one image and one category.
///
/// Detections are visited by descending score (ties keep input order). Each
/// takes the highest-IoU unmatched, non-ignored ground truth at or above the
/// threshold. Failing that, a detection overlapping an ignored box at or above
/// the threshold is set aside; ignored boxes may absorb any number of
/// detections. Everything else is a false positive.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GroundTruthBox],
    iou_threshold: f64,
    bucket: Option<SizeBucket>,
) -> Result<MatchResult, EvalError> {
    let first = dets
        .first()
        .map(|d| (d.image_id, d.category_id))
        .or_else(|| gts.first().map(|g| (g.image_id, g.category_id)));
    if let Some(group) = first {
        let mixed = dets.iter().any(|d| (d.image_id, d.category_id) != group)
            || gts.iter().any(|g| (g.image_id, g.category_id) != group);
        if mixed {
            return Err(EvalError::MixedImage);
        }
    }
    let dets: Vec<&Detection> = dets.iter().collect();
    let gts: Vec<&GroundTruthBox> = gts.iter().collect();
    Ok(match_group(&dets, &gts, iou_threshold, bucket))
}

pub(crate) fn match_group(
    dets: &[&Detection],
    gts: &[&GroundTruthBox],
    iou_threshold: f64,
    bucket: Option<SizeBucket>,
) -> MatchResult {
    let ignored: Vec<bool> = gts.iter().map(|g| is_ignored(g, bucket)).collect();
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));

    let mut taken = vec![false; gts.len()];
    let mut result = MatchResult::default();
    for di in order {
        let det = &dets[di].bbox;
        let mut best: Option<(usize, f64)> = None;
        let mut best_ignored: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            let overlap = iou(det, &gt.bbox);
            if overlap < iou_threshold {
                continue;
            }
            let slot = if ignored[gi] {
                &mut best_ignored
            } else if taken[gi] {
                continue;
            } else {
                &mut best
            };
            if slot.is_none_or(|(_, v)| overlap > v) {
                *slot = Some((gi, overlap));
            }
        }
        if let Some((gi, overlap)) = best {
            taken[gi] = true;
            result.pairs.push((di, gi, overlap));
        } else if best_ignored.is_some() {
            result.ignored_detections.push(di);
        } else {
            result.unmatched_detections.push(di);
        }
    }
    for (gi, &ign) in ignored.iter().enumerate() {
        if ign {
            result.ignored_ground_truth.push(gi);
        } else if !taken[gi] {
            result.unmatched_ground_truth.push(gi);
        }
    }
    result
}
