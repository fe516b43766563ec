//! Object-detection network selection toolkit.
//!
//! Scores detectors on annotated images, builds accuracy/latency frontiers,
//! labels each image with its best network, picks networks under changing
//! runtime constraints and trains predictors from cheap image features.

pub mod evaluation;
pub mod features;
pub mod frontier;
pub mod ingest;
pub mod model;
pub mod oracle;
pub mod predictor;
pub mod reactive;

pub use model::{
    AccuracyMetric, Backend, BoundingBox, CategoryId, Detection, GroundTruthBox, ImageId, NetworkId, NetworkProfile,
    PerImageScore, ProfileKey, Score, SizeBucket,
};
