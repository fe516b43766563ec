//! Brute-force reference for dataset mAP, written from the protocol
//! description without reusing any library code path.

use std::collections::BTreeMap;

use netsel_core::model::{BoundingBox, CategoryId, Detection, GroundTruthBox, ImageId, SizeBucket};

pub fn ref_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    inter / (a.w * a.h + b.w * b.h - inter)
}

pub fn ref_bucket(b: &BoundingBox) -> SizeBucket {
    let area = b.w * b.h;
    if area < 1024.0 {
        SizeBucket::Small
    } else if area < 9216.0 {
        SizeBucket::Medium
    } else {
        SizeBucket::Large
    }
}

struct Ranked {
    score: f64,
    image_pos: usize,
    rank: usize,
    tp: bool,
}

fn ref_ap(
    images: &[ImageId],
    category: CategoryId,
    gts: &[GroundTruthBox],
    dets: &[Detection],
    thr: f64,
    bucket: Option<SizeBucket>,
) -> Option<f64> {
    let mut ranked: Vec<Ranked> = Vec::new();
    let mut npos = 0usize;
    for (image_pos, &img) in images.iter().enumerate() {
        let g: Vec<&GroundTruthBox> = gts.iter().filter(|g| g.image_id == img && g.category_id == category).collect();
        let ign: Vec<bool> = g
            .iter()
            .map(|g| g.ignored || bucket.is_some_and(|b| ref_bucket(&g.bbox) != b))
            .collect();
        npos += ign.iter().filter(|&&i| !i).count();
        let mut d: Vec<&Detection> = dets.iter().filter(|d| d.image_id == img && d.category_id == category).collect();
        // insertion sort by descending score keeps equal scores in input order
        for i in 1..d.len() {
            let mut j = i;
            while j > 0 && d[j - 1].score < d[j].score {
                d.swap(j - 1, j);
                j -= 1;
            }
        }
        let mut used = vec![false; g.len()];
        for (rank, det) in d.iter().enumerate() {
            let mut pick: Option<usize> = None;
            let mut pick_iou = -1.0;
            let mut hits_ignored = false;
            for gi in 0..g.len() {
                let v = ref_iou(&det.bbox, &g[gi].bbox);
                if v < thr {
                    continue;
                }
                if ign[gi] {
                    hits_ignored = true;
                } else if !used[gi] && v > pick_iou {
                    pick = Some(gi);
                    pick_iou = v;
                }
            }
            match pick {
                Some(gi) => {
                    used[gi] = true;
                    ranked.push(Ranked {
                        score: det.score,
                        image_pos,
                        rank,
                        tp: true,
                    });
                }
                None if hits_ignored => {}
                None => ranked.push(Ranked {
                    score: det.score,
                    image_pos,
                    rank,
                    tp: false,
                }),
            }
        }
    }
    if npos == 0 {
        return None;
    }
    ranked.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(a.image_pos.cmp(&b.image_pos))
            .then(a.rank.cmp(&b.rank))
    });
    // enumerate every point of the precision-recall curve
    let mut curve: Vec<(f64, f64)> = Vec::new();
    let mut tp = 0.0;
    for (k, r) in ranked.iter().enumerate() {
        if r.tp {
            tp += 1.0;
        }
        curve.push((tp / npos as f64, tp / (k + 1) as f64));
    }
    let mut total = 0.0;
    for i in 0..=100 {
        let level = i as f64 / 100.0;
        let best = curve
            .iter()
            .filter(|(rec, _)| *rec >= level)
            .map(|(_, p)| *p)
            .fold(0.0, f64::max);
        total += best;
    }
    Some(total / 101.0)
}

/// `(overall, per class)`; overall is `None` when no class has positives.
pub fn ref_map(
    images: &[ImageId],
    categories: &[CategoryId],
    gts: &[GroundTruthBox],
    dets: &[Detection],
    thresholds: &[f64],
    bucket: Option<SizeBucket>,
) -> (Option<f64>, BTreeMap<CategoryId, f64>) {
    let mut per_class = BTreeMap::new();
    for &c in categories {
        let aps: Vec<Option<f64>> = thresholds.iter().map(|&t| ref_ap(images, c, gts, dets, t, bucket)).collect();
        if aps.iter().all(Option::is_some) {
            let s: f64 = aps.iter().map(|a| a.unwrap()).sum();
            per_class.insert(c, s / thresholds.len() as f64);
        }
    }
    let overall = if per_class.is_empty() {
        None
    } else {
        Some(per_class.values().sum::<f64>() / per_class.len() as f64)
    };
    (overall, per_class)
}
