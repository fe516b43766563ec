//! Domain types shared across the toolkit.
//!
//! Boxes live in continuous pixel coordinates `(x, y, w, h)`, with `x, y`
//! the top-left corner. Nothing here rounds to integers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type ImageId = u64;
pub type CategoryId = u64;

/// Upper bound (exclusive) of the small-object area range, 32².
pub const SMALL_AREA_LIMIT: f64 = 32.0 * 32.0;
/// Upper bound (exclusive) of the medium-object area range, 96².
pub const MEDIUM_AREA_LIMIT: f64 = 96.0 * 96.0;

/// Batch sizes used by the reference benchmarking campaign.
pub const CAMPAIGN_BATCH_SIZES: [u32; 6] = [1, 2, 4, 8, 16, 32];

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid bounding box [{x}, {y}, {w}, {h}]: width and height must be positive and coordinates finite")]
    InvalidBox { x: f64, y: f64, w: f64, h: f64 },
    #[error("unknown backend `{0}`")]
    UnknownBackend(String),
    #[error("unknown accuracy metric `{0}` (expected overall, small, medium, large or class:<id>)")]
    UnknownMetric(String),
    #[error("malformed network key `{0}` (expected <model>@<backend>@<batch>)")]
    MalformedKey(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, ModelError> {
        let valid = x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0;
        if !valid {
            return Err(ModelError::InvalidBox { x, y, w, h });
        }
        Ok(Self { x, y, w, h })
    }

    pub fn from_xywh(bbox: [f64; 4]) -> Result<Self, ModelError> {
        Self::new(bbox[0], bbox[1], bbox[2], bbox[3])
    }

    pub fn to_xywh(&self) -> [f64; 4] {
        [self.x, self.y, self.w, self.h]
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }
}

/// COCO object-size class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeBucket {
    Small,
    Medium,
    Large,
}

impl SizeBucket {
    pub const ALL: [SizeBucket; 3] = [SizeBucket::Small, SizeBucket::Medium, SizeBucket::Large];

    /// Boundary areas go to the larger bucket: `[0, 32²)`, `[32², 96²)`, `[96², ∞)`.
    pub fn from_area(area: f64) -> Self {
        if area < SMALL_AREA_LIMIT {
            SizeBucket::Small
        } else if area < MEDIUM_AREA_LIMIT {
            SizeBucket::Medium
        } else {
            SizeBucket::Large
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SizeBucket::Small => "small",
            SizeBucket::Medium => "medium",
            SizeBucket::Large => "large",
        }
    }
}

impl fmt::Display for SizeBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SizeBucket {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "small" => Ok(SizeBucket::Small),
            "medium" => Ok(SizeBucket::Medium),
            "large" => Ok(SizeBucket::Large),
            _ => Err(ModelError::UnknownMetric(s.to_string())),
        }
    }
}

pub fn area_bucket(bbox: &BoundingBox) -> SizeBucket {
    SizeBucket::from_area(bbox.area())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    pub image_id: ImageId,
    pub category_id: CategoryId,
    pub bbox: BoundingBox,
    /// Crowd regions and explicitly ignored annotations never count as positives.
    pub ignored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub image_id: ImageId,
    pub category_id: CategoryId,
    pub bbox: BoundingBox,
    pub score: f64,
}

/// Inference backend of a profiled configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Backend {
    #[serde(rename = "CPU")]
    Cpu,
    #[serde(rename = "CPU_AVX2")]
    CpuAvx2,
    #[serde(rename = "GPU")]
    Gpu,
    #[serde(rename = "GPU_TRT")]
    GpuTrt,
    #[serde(rename = "GPU_TRT_DYN")]
    GpuTrtDyn,
}

impl Backend {
    pub const ALL: [Backend; 5] = [Backend::Cpu, Backend::CpuAvx2, Backend::Gpu, Backend::GpuTrt, Backend::GpuTrtDyn];

    pub fn as_str(&self) -> &'static str {
        match self {
            Backend::Cpu => "CPU",
            Backend::CpuAvx2 => "CPU_AVX2",
            Backend::Gpu => "GPU",
            Backend::GpuTrt => "GPU_TRT",
            Backend::GpuTrtDyn => "GPU_TRT_DYN",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Backend::ALL
            .into_iter()
            .find(|b| b.as_str() == norm)
            .ok_or_else(|| ModelError::UnknownBackend(s.to_string()))
    }
}

/// Identifier of one network configuration, as used in score, oracle and
/// trace files. Profiles render their key as `<model>@<backend>@<batch>`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NetworkId(String);

impl NetworkId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NetworkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NetworkId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Uniqueness key of a profile within a registry.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProfileKey {
    pub model_name: String,
    pub backend: Backend,
    pub batch_size: u32,
}

impl ProfileKey {
    pub fn network_id(&self) -> NetworkId {
        NetworkId(self.to_string())
    }
}

impl fmt::Display for ProfileKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}@{}", self.model_name, self.backend, self.batch_size)
    }
}

impl FromStr for ProfileKey {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || ModelError::MalformedKey(s.to_string());
        let mut parts = s.rsplitn(3, '@');
        let batch = parts.next().ok_or_else(malformed)?;
        let backend = parts.next().ok_or_else(malformed)?;
        let model = parts.next().ok_or_else(malformed)?;
        if model.is_empty() {
            return Err(malformed());
        }
        Ok(ProfileKey {
            model_name: model.to_string(),
            backend: backend.parse().map_err(|_| malformed())?,
            batch_size: batch.parse().ok().filter(|&b| b > 0).ok_or_else(malformed)?,
        })
    }
}

/// Which accuracy figure a frontier, selector or oracle optimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AccuracyMetric {
    Overall,
    Bucket(SizeBucket),
    Class(CategoryId),
}

impl fmt::Display for AccuracyMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccuracyMetric::Overall => f.write_str("overall"),
            AccuracyMetric::Bucket(b) => write!(f, "{b}"),
            AccuracyMetric::Class(id) => write!(f, "class:{id}"),
        }
    }
}

impl FromStr for AccuracyMetric {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        if t == "overall" {
            return Ok(AccuracyMetric::Overall);
        }
        if let Some(id) = t.strip_prefix("class:") {
            return id
                .trim()
                .parse()
                .map(AccuracyMetric::Class)
                .map_err(|_| ModelError::UnknownMetric(s.to_string()));
        }
        t.parse::<SizeBucket>()
            .map(AccuracyMetric::Bucket)
            .map_err(|_| ModelError::UnknownMetric(s.to_string()))
    }
}

/// One measured (model, backend, batch) configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkProfile {
    pub model_name: String,
    pub backend: Backend,
    pub batch_size: u32,
    pub latency_ms: f64,
    pub map_overall: f64,
    pub map_small: f64,
    pub map_medium: f64,
    pub map_large: f64,
    #[serde(default)]
    pub per_class_map: BTreeMap<CategoryId, f64>,
}

impl NetworkProfile {
    pub fn key(&self) -> ProfileKey {
        ProfileKey {
            model_name: self.model_name.clone(),
            backend: self.backend,
            batch_size: self.batch_size,
        }
    }

    pub fn network_id(&self) -> NetworkId {
        self.key().network_id()
    }

    /// `None` when a per-class metric is requested that the profile does not carry.
    pub fn accuracy(&self, metric: AccuracyMetric) -> Option<f64> {
        match metric {
            AccuracyMetric::Overall => Some(self.map_overall),
            AccuracyMetric::Bucket(SizeBucket::Small) => Some(self.map_small),
            AccuracyMetric::Bucket(SizeBucket::Medium) => Some(self.map_medium),
            AccuracyMetric::Bucket(SizeBucket::Large) => Some(self.map_large),
            AccuracyMetric::Class(id) => self.per_class_map.get(&id).copied(),
        }
    }
}

/// Accuracy of one evaluation unit. An image or bucket with no positives has
/// no defined precision–recall curve and is kept distinct from zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Score {
    Value(f64),
    NoGroundTruth,
}

impl Score {
    pub fn value(&self) -> Option<f64> {
        match self {
            Score::Value(v) => Some(*v),
            Score::NoGroundTruth => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, Score::Value(_))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Score::Value(v) => write!(f, "{v}"),
            Score::NoGroundTruth => f.write_str("NA"),
        }
    }
}

impl FromStr for Score {
    type Err = std::num::ParseFloatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("na") || t.is_empty() {
            Ok(Score::NoGroundTruth)
        } else {
            t.parse().map(Score::Value)
        }
    }
}

/// Accuracy of one network on one image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerImageScore {
    pub image_id: ImageId,
    pub network_id: NetworkId,
    pub score: Score,
    pub latency_ms: f64,
}
