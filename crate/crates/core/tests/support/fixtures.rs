//! Seeded generators and hand-built fixtures shared by the test targets.

use std::collections::{BTreeMap, BTreeSet};

use netsel_core::features::RasterImage;
use netsel_core::ingest::{Category, Dataset, DetectionSet, ImageInfo};
use netsel_core::model::{
    AccuracyMetric, Backend, BoundingBox, CategoryId, Detection, GroundTruthBox, ImageId, NetworkId, NetworkProfile,
    PerImageScore, Score,
};
use netsel_core::predictor::{LabeledCorpus, LabeledRow};
use netsel_core::reactive::{ConstraintSpec, ContextEvent};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub struct MicroInstance {
    pub images: Vec<ImageId>,
    pub categories: Vec<CategoryId>,
    pub gts: Vec<GroundTruthBox>,
    pub dets: Vec<Detection>,
    pub dataset: Dataset,
    pub detset: DetectionSet,
}

const SIDES: [f64; 9] = [4.0, 8.0, 20.0, 32.0, 40.0, 64.0, 96.0, 100.0, 128.0];

fn random_box(rng: &mut impl Rng) -> BoundingBox {
    let w = *SIDES.choose(rng).unwrap();
    let h = *SIDES.choose(rng).unwrap();
    BoundingBox::new(rng.gen_range(0..100) as f64, rng.gen_range(0..100) as f64, w, h).unwrap()
}

/// Up to 3 images, up to 5 ground-truth and 5 detected boxes each, 2 classes.
/// Scores come from a coarse grid so ties occur.
pub fn micro_instance(rng: &mut impl Rng) -> MicroInstance {
    let n_images = rng.gen_range(1..=3);
    let images: Vec<ImageId> = (1..=n_images).collect();
    let categories = vec![1, 2];
    let mut gts = Vec::new();
    let mut dets = Vec::new();
    for &img in &images {
        let mine: Vec<GroundTruthBox> = (0..rng.gen_range(0..=5))
            .map(|_| GroundTruthBox {
                image_id: img,
                category_id: rng.gen_range(1..=2),
                bbox: random_box(rng),
                ignored: rng.gen_bool(0.15),
            })
            .collect();
        for _ in 0..rng.gen_range(0..=5) {
            let (category_id, bbox) = match mine.choose(rng) {
                Some(g) if rng.gen_bool(0.7) => {
                    let b = g.bbox;
                    let bbox = BoundingBox::new(
                        b.x + rng.gen_range(-4..=4) as f64,
                        b.y + rng.gen_range(-4..=4) as f64,
                        (b.w + rng.gen_range(-3..=3) as f64).max(1.0),
                        (b.h + rng.gen_range(-3..=3) as f64).max(1.0),
                    )
                    .unwrap();
                    let cat = if rng.gen_bool(0.85) { g.category_id } else { rng.gen_range(1..=2) };
                    (cat, bbox)
                }
                _ => (rng.gen_range(1..=2), random_box(rng)),
            };
            dets.push(Detection {
                image_id: img,
                category_id,
                bbox,
                score: rng.gen_range(1..=9) as f64 / 10.0,
            });
        }
        gts.extend(mine);
    }
    let dataset = Dataset::new(
        images
            .iter()
            .map(|&id| ImageInfo {
                id,
                width: 256,
                height: 256,
                file_name: None,
            })
            .collect(),
        categories
            .iter()
            .map(|&id| Category {
                id,
                name: format!("c{id}"),
            })
            .collect(),
        gts.clone(),
    )
    .unwrap();
    let detset = DetectionSet {
        network_id: "micro".into(),
        detections: dets.clone(),
    };
    MicroInstance {
        images,
        categories,
        gts,
        dets,
        dataset,
        detset,
    }
}

pub fn profile(model: &str, backend: Backend, batch: u32, latency_ms: f64, overall: f64) -> NetworkProfile {
    NetworkProfile {
        model_name: model.into(),
        backend,
        batch_size: batch,
        latency_ms,
        map_overall: overall,
        map_small: overall,
        map_medium: overall,
        map_large: overall,
        per_class_map: BTreeMap::new(),
    }
}

/// `n` profiles on a coarse latency/accuracy grid so that ties and
/// duplicates are common.
pub fn random_registry(rng: &mut impl Rng, n: usize) -> Vec<NetworkProfile> {
    let backends = [Backend::Cpu, Backend::CpuAvx2, Backend::Gpu, Backend::GpuTrt, Backend::GpuTrtDyn];
    (0..n)
        .map(|i| {
            let mut p = profile(
                &format!("m{}", i / 5),
                backends[i % 5],
                1 << rng.gen_range(0..6),
                rng.gen_range(1..=60) as f64 * 5.0,
                rng.gen_range(0..=40) as f64 / 80.0,
            );
            p.map_small = rng.gen_range(0..=40) as f64 / 80.0;
            p.per_class_map.insert(3, rng.gen_range(0..=40) as f64 / 80.0);
            p
        })
        .collect()
}

/// O(n^2) reference: indices of profiles nobody dominates.
pub fn brute_force_nondominated(points: &[(f64, f64)]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let (ai, li) = points[i];
            !points
                .iter()
                .any(|&(a, l)| a >= ai && l <= li && (a > ai || l < li))
        })
        .collect()
}

pub const ANSWER_NETWORKS: [(&str, f64, f64); 3] = [("n1@GPU@1", 100.0, 0.45), ("n2@GPU@1", 50.0, 0.35), ("n3@GPU@1", 10.0, 0.25)];

/// Per-image scores of three networks on ten images, and the winner each
/// image was built to have. `None` is an image without ground truth.
pub fn answer_key() -> (Vec<PerImageScore>, Vec<(ImageId, &'static str)>) {
    let table: [([Option<f64>; 3], &str); 10] = [
        ([Some(0.8), Some(0.5), Some(0.3)], "n1@GPU@1"),
        ([Some(0.2), Some(0.6), Some(0.1)], "n2@GPU@1"),
        ([Some(0.1), Some(0.2), Some(0.9)], "n3@GPU@1"),
        // equal scores: the faster network wins
        ([Some(0.7), Some(0.7), Some(0.3)], "n2@GPU@1"),
        ([Some(0.5), Some(0.5), Some(0.5)], "n3@GPU@1"),
        ([Some(0.4), Some(0.9), Some(0.9)], "n3@GPU@1"),
        ([Some(0.9), Some(0.1), Some(0.9)], "n3@GPU@1"),
        ([None, Some(0.3), Some(0.2)], "n2@GPU@1"),
        ([Some(0.6), None, None], "n1@GPU@1"),
        ([Some(0.0), Some(0.0), Some(0.0)], "n3@GPU@1"),
    ];
    let mut scores = Vec::new();
    let mut key = Vec::new();
    for (i, (row, winner)) in table.iter().enumerate() {
        let image_id = i as ImageId + 1;
        for (score, (net, latency, _)) in row.iter().zip(ANSWER_NETWORKS) {
            scores.push(PerImageScore {
                image_id,
                network_id: net.into(),
                score: score.map_or(Score::NoGroundTruth, Score::Value),
                latency_ms: latency,
            });
        }
        key.push((image_id, *winner));
    }
    (scores, key)
}

pub fn answer_profiles() -> Vec<NetworkProfile> {
    ANSWER_NETWORKS
        .iter()
        .map(|(id, latency, acc)| profile(&id[..2], Backend::Gpu, 1, *latency, *acc))
        .collect()
}

pub fn answer_networks() -> BTreeSet<NetworkId> {
    ANSWER_NETWORKS.iter().map(|(id, _, _)| NetworkId::from(*id)).collect()
}

pub const CAR: CategoryId = 3;

/// Accurate-but-slow and fast-but-coarse detectors: the fast one is 100x
/// quicker, nearly as good on cars and far worse overall.
pub fn two_profile_registry() -> Vec<NetworkProfile> {
    let mut accurate = profile("accurate", Backend::Gpu, 1, 2000.0, 0.44);
    accurate.per_class_map.insert(CAR, 0.60);
    let mut fast = profile("fast", Backend::GpuTrt, 1, 20.0, 0.20);
    fast.per_class_map.insert(CAR, 0.55);
    vec![accurate, fast]
}

/// City traffic with no latency bound, then a highway context from frame
/// 50 capping latency at 50 ms. Both maximize car accuracy.
pub fn two_context_events() -> Vec<ContextEvent> {
    vec![
        ContextEvent {
            frame_index: 0,
            label: "city".into(),
            constraints: ConstraintSpec::maximize(AccuracyMetric::Class(CAR)),
        },
        ContextEvent {
            frame_index: 50,
            label: "highway".into(),
            constraints: ConstraintSpec::maximize(AccuracyMetric::Class(CAR)).with_max_latency(50.0),
        },
    ]
}

/// Random noise, optionally overlaid with flat rectangles so edges and
/// corners occur.
pub fn random_raster(rng: &mut impl Rng, max_side: usize) -> RasterImage {
    let w = rng.gen_range(3..=max_side);
    let h = rng.gen_range(3..=max_side);
    let mut px: Vec<u8> = (0..3 * w * h).map(|_| rng.gen()).collect();
    if rng.gen_bool(0.5) {
        for _ in 0..rng.gen_range(1..4) {
            let (x0, y0) = (rng.gen_range(0..w), rng.gen_range(0..h));
            let (x1, y1) = (rng.gen_range(x0..w) + 1, rng.gen_range(y0..h) + 1);
            let c: [u8; 3] = rng.gen();
            for y in y0..y1 {
                for x in x0..x1 {
                    px[3 * (y * w + x)..3 * (y * w + x) + 3].copy_from_slice(&c);
                }
            }
        }
    }
    RasterImage::new(w, h, px).unwrap()
}

/// Gaussian blobs, one per label, centered `separation` apart along
/// distinct axes. `weights` sets the label frequencies.
pub fn blobs(rng: &mut impl Rng, n: usize, dim: usize, labels: &[(&str, f64)], separation: f64) -> LabeledCorpus {
    let noise = Normal::new(0.0, 1.0).unwrap();
    let total: f64 = labels.iter().map(|(_, w)| w).sum();
    let rows = (0..n)
        .map(|i| {
            let mut u = rng.gen::<f64>() * total;
            let mut li = 0;
            while li + 1 < labels.len() && u >= labels[li].1 {
                u -= labels[li].1;
                li += 1;
            }
            let mut features: Vec<f64> = (0..dim).map(|_| noise.sample(rng)).collect();
            features[li % dim] += separation;
            LabeledRow {
                image_id: i as ImageId,
                features,
                label: labels[li].0.into(),
            }
        })
        .collect();
    LabeledCorpus::new(rows).unwrap()
}
