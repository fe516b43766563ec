//! Loading and writing the toolkit's interchange files.
//!
//! * ground truth: COCO annotation documents
//! * detections: COCO results arrays
//! * profiles: `model,backend,batch,latency_ms,map_overall,map_small,map_medium,map_large[,class:<id>...]`
//! * per-image scores: `image_id,network_id,score,latency_ms`
//! * stream scenarios: `frame,label,max_latency_ms,min_accuracy,objective`
//!
//! Loaders validate cross-references and count every record they drop or
//! alter; the counts come back in [`LoadReport`] and are logged.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Backend, BoundingBox, CategoryId, Detection, GroundTruthBox, ImageId, NetworkId, NetworkProfile, PerImageScore,
    ProfileKey, Score, CAMPAIGN_BATCH_SIZES,
};
use crate::reactive::{ConstraintSpec, ContextEvent, InfeasiblePolicy};

pub const PROFILE_HEADER: [&str; 8] = [
    "model",
    "backend",
    "batch",
    "latency_ms",
    "map_overall",
    "map_small",
    "map_medium",
    "map_large",
];
pub const SCORE_HEADER: [&str; 4] = ["image_id", "network_id", "score", "latency_ms"];
pub const SCENARIO_HEADER: [&str; 5] = ["frame", "label", "max_latency_ms", "min_accuracy", "objective"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: PathBuf, reason: String },
    #[error("dangling reference in {path}: {reason}")]
    DanglingReference { path: PathBuf, reason: String },
    #[error("duplicate profile {key} in {path}")]
    DuplicateProfile { path: PathBuf, key: String },
}

impl IngestError {
    fn malformed(path: &Path, reason: impl Into<String>) -> Self {
        IngestError::MalformedFile {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }

    fn dangling(path: &Path, reason: impl Into<String>) -> Self {
        IngestError::DanglingReference {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }
}

type Result<T> = std::result::Result<T, IngestError>;

/// Records a loader dropped or altered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub dropped_boxes: usize,
    pub clamped_scores: usize,
    pub nonstandard_batches: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub id: ImageId,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "file_name")]
    pub file_name: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: CategoryId,
    pub name: String,
}

/// Ground truth for an image collection.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    images: Vec<ImageInfo>,
    categories: Vec<Category>,
    ground_truth: Vec<GroundTruthBox>,
    image_index: HashMap<ImageId, usize>,
    category_ids: HashSet<CategoryId>,
}

/// Cross-reference violation found while assembling a [`Dataset`].
#[derive(Debug, Error, PartialEq, Eq)]
pub enum DatasetError {
    #[error("duplicate image id {0}")]
    DuplicateImage(ImageId),
    #[error("duplicate category id {0}")]
    DuplicateCategory(CategoryId),
    #[error("annotation references unknown image id {0}")]
    UnknownImage(ImageId),
    #[error("annotation references unknown category id {0}")]
    UnknownCategory(CategoryId),
}

impl Dataset {
    pub fn new(
        images: Vec<ImageInfo>,
        categories: Vec<Category>,
        ground_truth: Vec<GroundTruthBox>,
    ) -> std::result::Result<Self, DatasetError> {
        let mut image_index = HashMap::with_capacity(images.len());
        for (i, img) in images.iter().enumerate() {
            if image_index.insert(img.id, i).is_some() {
                return Err(DatasetError::DuplicateImage(img.id));
            }
        }
        let mut category_ids = HashSet::with_capacity(categories.len());
        for cat in &categories {
            if !category_ids.insert(cat.id) {
                return Err(DatasetError::DuplicateCategory(cat.id));
            }
        }
        for gt in &ground_truth {
            if !image_index.contains_key(&gt.image_id) {
                return Err(DatasetError::UnknownImage(gt.image_id));
            }
            if !category_ids.contains(&gt.category_id) {
                return Err(DatasetError::UnknownCategory(gt.category_id));
            }
        }
        Ok(Self {
            images,
            categories,
            ground_truth,
            image_index,
            category_ids,
        })
    }

    pub fn images(&self) -> &[ImageInfo] {
        &self.images
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn ground_truth(&self) -> &[GroundTruthBox] {
        &self.ground_truth
    }

    pub fn has_image(&self, id: ImageId) -> bool {
        self.image_index.contains_key(&id)
    }

    pub fn has_category(&self, id: CategoryId) -> bool {
        self.category_ids.contains(&id)
    }

    /// Position of an image in the document order.
    pub fn image_position(&self, id: ImageId) -> Option<usize> {
        self.image_index.get(&id).copied()
    }

    pub fn ground_truth_for(&self, image_id: ImageId) -> impl Iterator<Item = &GroundTruthBox> {
        self.ground_truth.iter().filter(move |g| g.image_id == image_id)
    }

    /// Ground truth grouped by image, in image-id order.
    pub fn ground_truth_by_image(&self) -> BTreeMap<ImageId, Vec<&GroundTruthBox>> {
        let mut out: BTreeMap<ImageId, Vec<&GroundTruthBox>> = BTreeMap::new();
        for gt in &self.ground_truth {
            out.entry(gt.image_id).or_default().push(gt);
        }
        out
    }

    pub fn image_id_by_file_name(&self, file_name: &str) -> Option<ImageId> {
        self.images
            .iter()
            .find(|img| img.file_name.as_deref() == Some(file_name))
            .map(|img| img.id)
    }
}

/// Detections produced by one network configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionSet {
    pub network_id: NetworkId,
    pub detections: Vec<Detection>,
}

#[derive(Deserialize, Serialize)]
struct CocoDocument {
    images: Vec<ImageInfo>,
    categories: Vec<Category>,
    #[serde(default)]
    annotations: Vec<CocoAnnotation>,
}

#[derive(Deserialize, Serialize)]
struct CocoAnnotation {
    #[serde(default)]
    id: Option<u64>,
    image_id: ImageId,
    category_id: CategoryId,
    bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ignore: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    iscrowd: Option<u8>,
}

#[derive(Deserialize, Serialize)]
struct CocoResult {
    image_id: ImageId,
    category_id: CategoryId,
    bbox: [f64; 4],
    score: f64,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_ground_truth(path: &Path) -> Result<(Dataset, LoadReport)> {
    read_ground_truth(open(path)?, path)
}

/// `origin` only labels errors.
pub fn read_ground_truth(reader: impl Read, origin: &Path) -> Result<(Dataset, LoadReport)> {
    let doc: CocoDocument =
        serde_json::from_reader(reader).map_err(|e| IngestError::malformed(origin, e.to_string()))?;
    let mut report = LoadReport::default();
    let mut ground_truth = Vec::with_capacity(doc.annotations.len());
    for ann in doc.annotations {
        let ignored = ann.ignore.unwrap_or(0) != 0 || ann.iscrowd.unwrap_or(0) != 0;
        match BoundingBox::from_xywh(ann.bbox) {
            Ok(bbox) => ground_truth.push(GroundTruthBox {
                image_id: ann.image_id,
                category_id: ann.category_id,
                bbox,
                ignored,
            }),
            Err(_) => report.dropped_boxes += 1,
        }
    }
    if report.dropped_boxes > 0 {
        warn!(
            "{}: dropped {} annotation(s) with non-positive width or height",
            origin.display(),
            report.dropped_boxes
        );
    }
    let dataset = Dataset::new(doc.images, doc.categories, ground_truth).map_err(|e| match e {
        DatasetError::UnknownImage(_) | DatasetError::UnknownCategory(_) => IngestError::dangling(origin, e.to_string()),
        _ => IngestError::malformed(origin, e.to_string()),
    })?;
    Ok((dataset, report))
}

pub fn write_ground_truth(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_ground_truth_to(dataset, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn write_ground_truth_to(dataset: &Dataset, w: &mut impl Write) -> std::io::Result<()> {
    let doc = CocoDocument {
        images: dataset.images.clone(),
        categories: dataset.categories.clone(),
        annotations: dataset
            .ground_truth
            .iter()
            .enumerate()
            .map(|(i, g)| CocoAnnotation {
                id: Some(i as u64 + 1),
                image_id: g.image_id,
                category_id: g.category_id,
                bbox: g.bbox.to_xywh(),
                ignore: g.ignored.then_some(1),
                iscrowd: None,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut *w, &doc)?;
    writeln!(w)
}

/// Network id is taken from the file stem.
pub fn load_detections(path: &Path, dataset: &Dataset) -> Result<(DetectionSet, LoadReport)> {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_detections(open(path)?, path, NetworkId::new(stem), dataset)
}

pub fn read_detections(
    reader: impl Read,
    origin: &Path,
    network_id: NetworkId,
    dataset: &Dataset,
) -> Result<(DetectionSet, LoadReport)> {
    let records: Vec<CocoResult> =
        serde_json::from_reader(reader).map_err(|e| IngestError::malformed(origin, e.to_string()))?;
    let mut report = LoadReport::default();
    let mut detections = Vec::with_capacity(records.len());
    for (i, rec) in records.into_iter().enumerate() {
        if !dataset.has_image(rec.image_id) {
            return Err(IngestError::dangling(
                origin,
                format!("record {i} references unknown image id {}", rec.image_id),
            ));
        }
        if !dataset.has_category(rec.category_id) {
            return Err(IngestError::dangling(
                origin,
                format!("record {i} references unknown category id {}", rec.category_id),
            ));
        }
        let Ok(bbox) = BoundingBox::from_xywh(rec.bbox) else {
            report.dropped_boxes += 1;
            continue;
        };
        let score = rec.score.clamp(0.0, 1.0);
        if score != rec.score {
            report.clamped_scores += 1;
        }
        detections.push(Detection {
            image_id: rec.image_id,
            category_id: rec.category_id,
            bbox,
            score,
        });
    }
    if report.clamped_scores > 0 {
        warn!("{}: clamped {} score(s) into [0, 1]", origin.display(), report.clamped_scores);
    }
    if report.dropped_boxes > 0 {
        warn!("{}: dropped {} degenerate detection box(es)", origin.display(), report.dropped_boxes);
    }
    Ok((DetectionSet { network_id, detections }, report))
}

pub fn write_detections(set: &DetectionSet, path: &Path) -> Result<()> {
    let records: Vec<CocoResult> = set
        .detections
        .iter()
        .map(|d| CocoResult {
            image_id: d.image_id,
            category_id: d.category_id,
            bbox: d.bbox.to_xywh(),
            score: d.score,
        })
        .collect();
    let mut w = create(path)?;
    serde_json::to_writer(&mut w, &records).map_err(|e| IngestError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    w.flush().map_err(io_err(path))
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader)
}

fn parse_field<T: std::str::FromStr>(path: &Path, row: usize, column: &str, text: &str) -> Result<T> {
    text.parse()
        .map_err(|_| IngestError::malformed(path, format!("row {row}: cannot parse {column} value `{text}`")))
}

fn parse_fraction(path: &Path, row: usize, column: &str, text: &str) -> Result<f64> {
    let v: f64 = parse_field(path, row, column, text)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(IngestError::malformed(
            path,
            format!("row {row}: {column} = {v} is outside [0, 1]"),
        ));
    }
    Ok(v)
}

pub fn load_profiles(path: &Path) -> Result<(Vec<NetworkProfile>, LoadReport)> {
    read_profiles(open(path)?, path)
}

pub fn read_profiles(reader: impl Read, origin: &Path) -> Result<(Vec<NetworkProfile>, LoadReport)> {
    let mut rdr = csv_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::malformed(origin, e.to_string()))?
        .clone();
    let mut fixed = [usize::MAX; 8];
    let mut class_columns: Vec<(usize, CategoryId)> = Vec::new();
    for (i, name) in headers.iter().enumerate() {
        if let Some(pos) = PROFILE_HEADER.iter().position(|h| *h == name) {
            if fixed[pos] != usize::MAX {
                return Err(IngestError::malformed(origin, format!("column `{name}` appears twice")));
            }
            fixed[pos] = i;
        } else if let Some(id) = name.strip_prefix("class:") {
            let id = id
                .parse()
                .map_err(|_| IngestError::malformed(origin, format!("bad class column `{name}`")))?;
            class_columns.push((i, id));
        } else {
            return Err(IngestError::malformed(origin, format!("unexpected column `{name}`")));
        }
    }
    if let Some(missing) = fixed.iter().position(|&i| i == usize::MAX) {
        return Err(IngestError::malformed(
            origin,
            format!("missing column `{}`", PROFILE_HEADER[missing]),
        ));
    }

    let mut report = LoadReport::default();
    let mut seen: HashSet<ProfileKey> = HashSet::new();
    let mut profiles = Vec::new();
    for (row_idx, record) in rdr.records().enumerate() {
        let row = row_idx + 2;
        let record = record.map_err(|e| IngestError::malformed(origin, e.to_string()))?;
        let get = |pos: usize| record.get(fixed[pos]).unwrap_or("");
        let model_name = get(0).to_string();
        if model_name.is_empty() {
            return Err(IngestError::malformed(origin, format!("row {row}: empty model name")));
        }
        let backend: Backend = parse_field(origin, row, "backend", get(1))?;
        let batch_size: u32 = parse_field(origin, row, "batch", get(2))?;
        if batch_size == 0 {
            return Err(IngestError::malformed(origin, format!("row {row}: batch must be positive")));
        }
        if !CAMPAIGN_BATCH_SIZES.contains(&batch_size) {
            report.nonstandard_batches += 1;
        }
        let latency_ms: f64 = parse_field(origin, row, "latency_ms", get(3))?;
        if !(latency_ms.is_finite() && latency_ms > 0.0) {
            return Err(IngestError::malformed(
                origin,
                format!("row {row}: latency_ms must be positive, got {latency_ms}"),
            ));
        }
        let mut per_class_map = BTreeMap::new();
        for &(col, id) in &class_columns {
            let text = record.get(col).unwrap_or("");
            if !text.is_empty() {
                per_class_map.insert(id, parse_fraction(origin, row, &format!("class:{id}"), text)?);
            }
        }
        let profile = NetworkProfile {
            model_name,
            backend,
            batch_size,
            latency_ms,
            map_overall: parse_fraction(origin, row, "map_overall", get(4))?,
            map_small: parse_fraction(origin, row, "map_small", get(5))?,
            map_medium: parse_fraction(origin, row, "map_medium", get(6))?,
            map_large: parse_fraction(origin, row, "map_large", get(7))?,
            per_class_map,
        };
        if !seen.insert(profile.key()) {
            return Err(IngestError::DuplicateProfile {
                path: origin.to_path_buf(),
                key: profile.key().to_string(),
            });
        }
        profiles.push(profile);
    }
    if report.nonstandard_batches > 0 {
        warn!(
            "{}: {} profile(s) use a batch size outside {:?}",
            origin.display(),
            report.nonstandard_batches,
            CAMPAIGN_BATCH_SIZES
        );
    }
    Ok((profiles, report))
}

pub fn write_profiles(profiles: &[NetworkProfile], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_profiles_to(profiles, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn write_profiles_to(profiles: &[NetworkProfile], w: &mut impl Write) -> std::io::Result<()> {
    let classes: BTreeSet<CategoryId> = profiles
        .iter()
        .flat_map(|p| p.per_class_map.keys().copied())
        .collect();
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = PROFILE_HEADER.iter().map(|s| s.to_string()).collect();
    header.extend(classes.iter().map(|id| format!("class:{id}")));
    out.write_record(&header)?;
    for p in profiles {
        let mut row = vec![
            p.model_name.clone(),
            p.backend.to_string(),
            p.batch_size.to_string(),
            p.latency_ms.to_string(),
            p.map_overall.to_string(),
            p.map_small.to_string(),
            p.map_medium.to_string(),
            p.map_large.to_string(),
        ];
        row.extend(
            classes
                .iter()
                .map(|id| p.per_class_map.get(id).map(|v| v.to_string()).unwrap_or_default()),
        );
        out.write_record(&row)?;
    }
    out.flush()
}

pub fn load_scores(path: &Path) -> Result<Vec<PerImageScore>> {
    read_scores(open(path)?, path)
}

pub fn read_scores(reader: impl Read, origin: &Path) -> Result<Vec<PerImageScore>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::malformed(origin, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != SCORE_HEADER {
        return Err(IngestError::malformed(
            origin,
            format!("expected header `{}`", SCORE_HEADER.join(",")),
        ));
    }
    let mut out = Vec::new();
    for (row_idx, record) in rdr.records().enumerate() {
        let row = row_idx + 2;
        let record = record.map_err(|e| IngestError::malformed(origin, e.to_string()))?;
        let score: Score = parse_field(origin, row, "score", &record[2])?;
        if let Score::Value(v) = score {
            if !(0.0..=1.0).contains(&v) {
                return Err(IngestError::malformed(origin, format!("row {row}: score {v} outside [0, 1]")));
            }
        }
        let latency_ms: f64 = parse_field(origin, row, "latency_ms", &record[3])?;
        if !(latency_ms.is_finite() && latency_ms > 0.0) {
            return Err(IngestError::malformed(origin, format!("row {row}: latency_ms must be positive")));
        }
        out.push(PerImageScore {
            image_id: parse_field(origin, row, "image_id", &record[0])?,
            network_id: NetworkId::new(&record[1]),
            score,
            latency_ms,
        });
    }
    Ok(out)
}

pub fn write_scores(scores: &[PerImageScore], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_scores_to(scores, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn write_scores_to(scores: &[PerImageScore], w: &mut impl Write) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SCORE_HEADER)?;
    for s in scores {
        out.write_record([
            s.image_id.to_string(),
            s.network_id.to_string(),
            s.score.to_string(),
            s.latency_ms.to_string(),
        ])?;
    }
    out.flush()
}

/// Empty, `inf` or `unbounded` latency cells mean no latency bound; an empty
/// accuracy cell means no accuracy floor.
pub fn load_scenario(path: &Path, policy: InfeasiblePolicy) -> Result<Vec<ContextEvent>> {
    read_scenario(open(path)?, path, policy)
}

pub fn read_scenario(reader: impl Read, origin: &Path, policy: InfeasiblePolicy) -> Result<Vec<ContextEvent>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::malformed(origin, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != SCENARIO_HEADER {
        return Err(IngestError::malformed(
            origin,
            format!("expected header `{}`", SCENARIO_HEADER.join(",")),
        ));
    }
    let mut events: Vec<ContextEvent> = Vec::new();
    for (row_idx, record) in rdr.records().enumerate() {
        let row = row_idx + 2;
        let record = record.map_err(|e| IngestError::malformed(origin, e.to_string()))?;
        let frame_index: u64 = parse_field(origin, row, "frame", &record[0])?;
        let latency_text = record[2].to_ascii_lowercase();
        let max_latency_ms = match latency_text.as_str() {
            "" | "inf" | "unbounded" => None,
            t => {
                let v: f64 = parse_field(origin, row, "max_latency_ms", t)?;
                if v.is_nan() || v <= 0.0 {
                    return Err(IngestError::malformed(origin, format!("row {row}: max_latency_ms must be positive")));
                }
                Some(v)
            }
        };
        let min_accuracy = match &record[3] {
            "" => None,
            t => Some(parse_fraction(origin, row, "min_accuracy", t)?),
        };
        let objective_metric = record[4]
            .parse()
            .map_err(|e: crate::model::ModelError| IngestError::malformed(origin, format!("row {row}: {e}")))?;
        if let Some(prev) = events.last() {
            if frame_index <= prev.frame_index {
                return Err(IngestError::malformed(
                    origin,
                    format!("row {row}: frame {frame_index} is not after frame {}", prev.frame_index),
                ));
            }
        }
        events.push(ContextEvent {
            frame_index,
            label: record[1].to_string(),
            constraints: ConstraintSpec {
                max_latency_ms,
                min_accuracy,
                objective_metric,
                infeasible_policy: policy,
            },
        });
    }
    Ok(events)
}

/// Per-frame measured latencies: `frame,latency_ms`.
pub fn load_latency_trace(path: &Path) -> Result<BTreeMap<u64, f64>> {
    let mut rdr = csv_reader(open(path)?);
    let mut out = BTreeMap::new();
    for (row_idx, record) in rdr.records().enumerate() {
        let row = row_idx + 2;
        let record = record.map_err(|e| IngestError::malformed(path, e.to_string()))?;
        if record.len() != 2 {
            return Err(IngestError::malformed(path, format!("row {row}: expected `frame,latency_ms`")));
        }
        let frame: u64 = parse_field(path, row, "frame", &record[0])?;
        let latency: f64 = parse_field(path, row, "latency_ms", &record[1])?;
        if !(latency.is_finite() && latency > 0.0) {
            return Err(IngestError::malformed(path, format!("row {row}: latency_ms must be positive")));
        }
        out.insert(frame, latency);
    }
    Ok(out)
}
