//! Accuracy/latency Pareto frontiers and best-configuration tables.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use thiserror::Error;

use crate::model::{AccuracyMetric, NetworkProfile};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrontierError {
    #[error("profile registry is empty")]
    EmptyRegistry,
    #[error("profile {profile} carries no `{metric}` accuracy")]
    UnknownMetric { metric: String, profile: String },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontierPoint<'a> {
    pub profile: &'a NetworkProfile,
    pub accuracy: f64,
    pub latency_ms: f64,
}

/// `p` dominates `q` when it is at least as accurate and at least as fast,
/// and strictly better in one of the two.
pub fn dominates(p: &FrontierPoint, q: &FrontierPoint) -> bool {
    p.accuracy >= q.accuracy
        && p.latency_ms <= q.latency_ms
        && (p.accuracy > q.accuracy || p.latency_ms < q.latency_ms)
}

pub(crate) fn points(profiles: &[NetworkProfile], metric: AccuracyMetric) -> Result<Vec<FrontierPoint<'_>>, FrontierError> {
    if profiles.is_empty() {
        return Err(FrontierError::EmptyRegistry);
    }
    profiles
        .iter()
        .map(|p| {
            let accuracy = p.accuracy(metric).ok_or_else(|| FrontierError::UnknownMetric {
                metric: metric.to_string(),
                profile: p.key().to_string(),
            })?;
            Ok(FrontierPoint {
                profile: p,
                accuracy,
                latency_ms: p.latency_ms,
            })
        })
        .collect()
}

/// Non-dominated profiles under `metric`, fastest first. Among points equal
/// in both coordinates only the smallest profile key survives.
pub fn pareto_frontier(profiles: &[NetworkProfile], metric: AccuracyMetric) -> Result<Vec<FrontierPoint<'_>>, FrontierError> {
    let mut pts = points(profiles, metric)?;
    pts.sort_by(|a, b| {
        a.latency_ms
            .total_cmp(&b.latency_ms)
            .then(b.accuracy.total_cmp(&a.accuracy))
            .then_with(|| a.profile.key().cmp(&b.profile.key()))
    });
    let mut frontier: Vec<FrontierPoint> = Vec::new();
    for p in pts {
        if frontier.last().is_none_or(|best| p.accuracy > best.accuracy) {
            frontier.push(p);
        }
    }
    Ok(frontier)
}

/// Most accurate configuration of each model; ties go to the lower latency,
/// then the smaller key.
pub fn best_per_network(
    profiles: &[NetworkProfile],
    metric: AccuracyMetric,
) -> Result<BTreeMap<String, FrontierPoint<'_>>, FrontierError> {
    let better = |a: &FrontierPoint, b: &FrontierPoint| -> bool {
        match a.accuracy.total_cmp(&b.accuracy) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => match a.latency_ms.total_cmp(&b.latency_ms) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => a.profile.key() < b.profile.key(),
            },
        }
    };
    let mut best: BTreeMap<String, FrontierPoint> = BTreeMap::new();
    for p in points(profiles, metric)? {
        match best.get(&p.profile.model_name) {
            Some(cur) if !better(&p, cur) => {}
            _ => {
                best.insert(p.profile.model_name.clone(), p);
            }
        }
    }
    Ok(best)
}

/// `model,backend,batch,latency_ms,accuracy`.
pub fn write_points_to<'a>(
    points: impl IntoIterator<Item = &'a FrontierPoint<'a>>,
    w: &mut impl Write,
) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["model", "backend", "batch", "latency_ms", "accuracy"])?;
    for p in points {
        out.write_record([
            p.profile.model_name.clone(),
            p.profile.backend.to_string(),
            p.profile.batch_size.to_string(),
            p.latency_ms.to_string(),
            p.accuracy.to_string(),
        ])?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Backend;

    fn profile(model: &str, backend: Backend, batch: u32, latency: f64, acc: f64) -> NetworkProfile {
        NetworkProfile {
            model_name: model.into(),
            backend,
            batch_size: batch,
            latency_ms: latency,
            map_overall: acc,
            map_small: acc / 2.0,
            map_medium: acc,
            map_large: acc,
            per_class_map: BTreeMap::new(),
        }
    }

    fn keys(points: &[FrontierPoint]) -> Vec<String> {
        points.iter().map(|p| p.profile.key().to_string()).collect()
    }

    #[test]
    fn single_profile() {
        let reg = [profile("a", Backend::Gpu, 1, 10.0, 0.3)];
        assert_eq!(keys(&pareto_frontier(&reg, AccuracyMetric::Overall).unwrap()), ["a@GPU@1"]);
    }

    #[test]
    fn dominated_point_dropped() {
        let reg = [
            profile("a", Backend::Gpu, 1, 100.0, 0.4),
            profile("b", Backend::Gpu, 1, 200.0, 0.3),
        ];
        assert_eq!(keys(&pareto_frontier(&reg, AccuracyMetric::Overall).unwrap()), ["a@GPU@1"]);
    }

    #[test]
    fn duplicates_collapse_to_smallest_key() {
        let reg = [
            profile("b", Backend::Gpu, 1, 10.0, 0.3),
            profile("a", Backend::GpuTrt, 2, 10.0, 0.3),
            profile("a", Backend::Gpu, 4, 10.0, 0.3),
        ];
        assert_eq!(keys(&pareto_frontier(&reg, AccuracyMetric::Overall).unwrap()), ["a@GPU@4"]);
    }

    #[test]
    fn frontier_is_sorted_by_latency() {
        let reg = [
            profile("slow", Backend::Cpu, 1, 900.0, 0.44),
            profile("fast", Backend::Gpu, 8, 20.0, 0.2),
            profile("mid", Backend::Gpu, 1, 80.0, 0.33),
            profile("bad", Backend::Cpu, 1, 1000.0, 0.1),
        ];
        assert_eq!(
            keys(&pareto_frontier(&reg, AccuracyMetric::Overall).unwrap()),
            ["fast@GPU@8", "mid@GPU@1", "slow@CPU@1"]
        );
    }

    #[test]
    fn errors() {
        assert_eq!(pareto_frontier(&[], AccuracyMetric::Overall).unwrap_err(), FrontierError::EmptyRegistry);
        let reg = [profile("a", Backend::Gpu, 1, 10.0, 0.3)];
        assert!(matches!(
            pareto_frontier(&reg, AccuracyMetric::Class(3)),
            Err(FrontierError::UnknownMetric { .. })
        ));
    }

    #[test]
    fn best_prefers_faster_backend_at_equal_accuracy() {
        let reg = [
            profile("yolo", Backend::Cpu, 1, 300.0, 0.3),
            profile("yolo", Backend::Gpu, 1, 30.0, 0.3),
        ];
        let best = best_per_network(&reg, AccuracyMetric::Overall).unwrap();
        assert_eq!(best["yolo"].profile.backend, Backend::Gpu);
    }

    #[test]
    fn best_can_be_a_cpu_configuration() {
        let reg = [
            profile("ssdlite-mobilenet-v2", Backend::Cpu, 1, 40.0, 0.22),
            profile("ssdlite-mobilenet-v2", Backend::Gpu, 1, 35.0, 0.21),
            profile("ssdlite-mobilenet-v2", Backend::GpuTrt, 8, 12.0, 0.20),
        ];
        let best = best_per_network(&reg, AccuracyMetric::Overall).unwrap();
        assert_eq!(best["ssdlite-mobilenet-v2"].profile.key().to_string(), "ssdlite-mobilenet-v2@CPU@1");
    }

    #[test]
    fn bucket_metric_changes_the_frontier() {
        let mut a = profile("a", Backend::Gpu, 1, 10.0, 0.3);
        let mut b = profile("b", Backend::Gpu, 1, 20.0, 0.4);
        a.map_small = 0.25;
        b.map_small = 0.2;
        let reg = [a, b];
        assert_eq!(pareto_frontier(&reg, AccuracyMetric::Overall).unwrap().len(), 2);
        assert_eq!(keys(&pareto_frontier(&reg, "small".parse().unwrap()).unwrap()), ["a@GPU@1"]);
    }
}
