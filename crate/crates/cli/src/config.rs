//! Optional TOML run configuration. Command-line flags take precedence.

use std::path::{Path, PathBuf};

use anyhow::Context;
use netsel_core::features::FeatureConfig;
use netsel_core::predictor::TrainingConfig;
use netsel_core::reactive::InfeasiblePolicy;
use serde::Deserialize;

use crate::BadInput;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub paths: PathsConfig,
    pub features: FeatureConfig,
    pub predictor: TrainingConfig,
    pub simulate: SimulateConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub dataset: Option<PathBuf>,
    /// Files or directories; directories contribute their `*.json` files.
    pub detections: Vec<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
    pub latency_trace: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub frames: Option<u64>,
    pub switch_cost_ms: Option<f64>,
    pub policy: Option<InfeasiblePolicy>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        if !path.exists() {
            return Err(BadInput(format!("config file {} does not exist", path.display())).into());
        }
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| BadInput(format!("config file {}: {e}", path.display())))?;
        // relative paths in the file are relative to the file itself
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut cfg.paths;
        for p in [
            &mut paths.dataset,
            &mut paths.profiles,
            &mut paths.scores,
            &mut paths.scenario,
            &mut paths.latency_trace,
            &mut paths.images,
            &mut paths.features,
            &mut paths.labels,
            &mut paths.model,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        paths.detections.iter_mut().for_each(fix);
        if let Some(out) = &mut cfg.out_dir {
            fix(out);
        }
        Ok(cfg)
    }
}
