//! Per-image best-network labels.
//!
//! The winner on an image is the network with the highest per-image mAP; equal
//! scores go to the lowest latency, then to the smallest network id. Images
//! on which no network has a defined score are set aside and reported.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use thiserror::Error;

use crate::frontier::FrontierPoint;
use crate::model::{ImageId, NetworkId, PerImageScore, Score};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("no networks to choose from")]
    EmptyRegistry,
    #[error("missing score for image {image_id} on network {network_id}")]
    IncompleteScores { image_id: ImageId, network_id: NetworkId },
    #[error("image {image_id} is scored twice for network {network_id}")]
    DuplicateScore { image_id: ImageId, network_id: NetworkId },
    #[error("cannot summarize an empty label set")]
    EmptyLabels,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleLabel {
    pub image_id: ImageId,
    pub network_id: NetworkId,
    pub score: f64,
    /// Winner score minus the best score of any other network; 0 when no
    /// other network has a defined score.
    pub runner_up_margin: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Oracle {
    /// Ordered by image id.
    pub labels: Vec<OracleLabel>,
    /// Images with no ground truth under every network.
    pub excluded: Vec<ImageId>,
}

fn rank(a: &PerImageScore, b: &PerImageScore) -> Ordering {
    // Ordering::Less means `a` is the better choice
    match (a.score, b.score) {
        (Score::Value(x), Score::Value(y)) => y
            .total_cmp(&x)
            .then(a.latency_ms.total_cmp(&b.latency_ms))
            .then_with(|| a.network_id.cmp(&b.network_id)),
        (Score::Value(_), Score::NoGroundTruth) => Ordering::Less,
        (Score::NoGroundTruth, Score::Value(_)) => Ordering::Greater,
        (Score::NoGroundTruth, Score::NoGroundTruth) => a.network_id.cmp(&b.network_id),
    }
}

/// Labels every scored image with its best network among `networks`.
/// Scores for networks outside `networks` are ignored.
pub fn build_oracle(scores: &[PerImageScore], networks: &BTreeSet<NetworkId>) -> Result<Oracle, OracleError> {
    if networks.is_empty() {
        return Err(OracleError::EmptyRegistry);
    }
    let mut by_image: BTreeMap<ImageId, HashMap<&NetworkId, &PerImageScore>> = BTreeMap::new();
    for s in scores {
        let entry = by_image.entry(s.image_id).or_default();
        if !networks.contains(&s.network_id) {
            continue;
        }
        if entry.insert(&s.network_id, s).is_some() {
            return Err(OracleError::DuplicateScore {
                image_id: s.image_id,
                network_id: s.network_id.clone(),
            });
        }
    }

    let mut oracle = Oracle::default();
    for (image_id, per_net) in by_image {
        let mut candidates: Vec<&PerImageScore> = Vec::with_capacity(networks.len());
        for net in networks {
            let s = per_net.get(net).ok_or_else(|| OracleError::IncompleteScores {
                image_id,
                network_id: net.clone(),
            })?;
            candidates.push(s);
        }
        candidates.sort_by(|a, b| rank(a, b));
        let Score::Value(best) = candidates[0].score else {
            oracle.excluded.push(image_id);
            continue;
        };
        let runner_up = candidates[1..].iter().find_map(|c| c.score.value());
        oracle.labels.push(OracleLabel {
            image_id,
            network_id: candidates[0].network_id.clone(),
            score: best,
            runner_up_margin: runner_up.map_or(0.0, |r| best - r),
        });
    }
    Ok(oracle)
}

/// Rebuilds the labels of the already-labeled images using only frontier networks.
pub fn restrict_to_pareto(
    labels: &[OracleLabel],
    scores: &[PerImageScore],
    frontier: &[FrontierPoint],
) -> Result<Oracle, OracleError> {
    let images: BTreeSet<ImageId> = labels.iter().map(|l| l.image_id).collect();
    let networks: BTreeSet<NetworkId> = frontier.iter().map(|p| p.profile.network_id()).collect();
    let kept: Vec<PerImageScore> = scores
        .iter()
        .filter(|s| images.contains(&s.image_id))
        .cloned()
        .collect();
    build_oracle(&kept, &networks)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Share {
    pub count: usize,
    pub fraction: f64,
}

pub fn oracle_distribution(labels: &[OracleLabel]) -> Result<BTreeMap<NetworkId, Share>, OracleError> {
    if labels.is_empty() {
        return Err(OracleError::EmptyLabels);
    }
    let mut counts: BTreeMap<NetworkId, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l.network_id.clone()).or_default() += 1;
    }
    let total = labels.len() as f64;
    Ok(counts
        .into_iter()
        .map(|(id, count)| {
            (
                id,
                Share {
                    count,
                    fraction: count as f64 / total,
                },
            )
        })
        .collect())
}

/// `image_id,network_id,score,margin`.
pub fn write_labels_to(labels: &[OracleLabel], w: &mut impl Write) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["image_id", "network_id", "score", "margin"])?;
    for l in labels {
        out.write_record([
            l.image_id.to_string(),
            l.network_id.to_string(),
            l.score.to_string(),
            l.runner_up_margin.to_string(),
        ])?;
    }
    out.flush()
}

pub fn read_labels(reader: impl std::io::Read) -> Result<Vec<OracleLabel>, String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
    if headers.iter().collect::<Vec<_>>() != ["image_id", "network_id", "score", "margin"] {
        return Err("expected header `image_id,network_id,score,margin`".into());
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let bad = |col: &str| format!("row {}: bad {col}", i + 2);
        out.push(OracleLabel {
            image_id: rec[0].parse().map_err(|_| bad("image_id"))?,
            network_id: NetworkId::new(&rec[1]),
            score: rec[2].parse().map_err(|_| bad("score"))?,
            runner_up_margin: rec[3].parse().map_err(|_| bad("margin"))?,
        });
    }
    Ok(out)
}

/// `network_id,count,fraction`.
pub fn write_distribution_to(dist: &BTreeMap<NetworkId, Share>, w: &mut impl Write) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["network_id", "count", "fraction"])?;
    for (id, share) in dist {
        out.write_record([id.to_string(), share.count.to_string(), share.fraction.to_string()])?;
    }
    out.flush()
}
