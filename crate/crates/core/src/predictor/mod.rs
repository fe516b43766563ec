//! Traditional-ML network predictor: standardize, reduce with PCA, classify.

mod classifier;
mod pca;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use classifier::{train, ClassifierKind, ClassifierModel, Hyperparameters, TreeNode};
pub use pca::{pca_fit, PcaModel};

use crate::features::FeatureVector;
use crate::model::{ImageId, NetworkId};
use crate::oracle::OracleLabel;

pub const MODEL_FORMAT: &str = "netsel-predictor";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("corpus has no rows to balance")]
    EmptyClass,
    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),
    #[error("unknown classifier kind `{0}`")]
    UnknownKind(String),
    #[error("{0}")]
    BadParameter(String),
    #[error("bad corpus: {0}")]
    BadCorpus(String),
    #[error("model file: {0}")]
    BadModel(String),
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledRow {
    pub image_id: ImageId,
    pub features: Vec<f64>,
    pub label: NetworkId,
}

/// Feature rows with their target network, unique by image id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledCorpus {
    rows: Vec<LabeledRow>,
}

impl LabeledCorpus {
    pub fn new(rows: Vec<LabeledRow>) -> Result<Self, PredictorError> {
        let mut seen = BTreeSet::new();
        for r in &rows {
            if !seen.insert(r.image_id) {
                return Err(PredictorError::BadCorpus(format!("image {} appears twice", r.image_id)));
            }
            if r.features.len() != rows[0].features.len() {
                return Err(PredictorError::BadCorpus(format!("image {} has a different feature count", r.image_id)));
            }
        }
        Ok(Self { rows })
    }

    /// Joins feature rows with oracle labels on image id. Images present on
    /// only one side are dropped; the count of dropped images is returned.
    pub fn join(features: &[(ImageId, FeatureVector)], labels: &[OracleLabel]) -> Result<(Self, usize), PredictorError> {
        let by_id: BTreeMap<ImageId, &NetworkId> = labels.iter().map(|l| (l.image_id, &l.network_id)).collect();
        let mut rows = Vec::new();
        for (id, v) in features {
            if let Some(label) = by_id.get(id) {
                rows.push(LabeledRow {
                    image_id: *id,
                    features: v.as_slice().to_vec(),
                    label: (*label).clone(),
                });
            }
        }
        let dropped = features.len() + labels.len() - 2 * rows.len();
        Ok((Self::new(rows)?, dropped))
    }

    pub fn rows(&self) -> &[LabeledRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.features.clone()).collect()
    }

    pub fn labels(&self) -> Vec<NetworkId> {
        self.rows.iter().map(|r| r.label.clone()).collect()
    }

    pub fn class_counts(&self) -> BTreeMap<NetworkId, usize> {
        let mut c = BTreeMap::new();
        for r in &self.rows {
            *c.entry(r.label.clone()).or_default() += 1;
        }
        c
    }

    /// Same rows with features mapped through `f`.
    pub fn map_features(&self, f: impl Fn(&[f64]) -> Vec<f64> + Sync) -> Self {
        Self {
            rows: self
                .rows
                .par_iter()
                .map(|r| LabeledRow {
                    image_id: r.image_id,
                    features: f(&r.features),
                    label: r.label.clone(),
                })
                .collect(),
        }
    }

    /// Labels reassigned by a seeded permutation; breaks any feature/label link.
    pub fn with_shuffled_labels(&self, seed: u64) -> Self {
        let mut labels = self.labels();
        labels.shuffle(&mut rng(seed));
        Self {
            rows: self
                .rows
                .iter()
                .zip(labels)
                .map(|(r, label)| LabeledRow { label, ..r.clone() })
                .collect(),
        }
    }

    /// Feature vectors reassigned by a seeded permutation.
    pub fn with_permuted_features(&self, seed: u64) -> Self {
        let mut features = self.features();
        features.shuffle(&mut rng(seed));
        Self {
            rows: self
                .rows
                .iter()
                .zip(features)
                .map(|(r, features)| LabeledRow { features, ..r.clone() })
                .collect(),
        }
    }
}

/// Undersamples every label to the minority count. Kept rows stay in input order.
pub fn balance(corpus: &LabeledCorpus, seed: u64) -> Result<LabeledCorpus, PredictorError> {
    if corpus.is_empty() {
        return Err(PredictorError::EmptyClass);
    }
    let mut groups: BTreeMap<&NetworkId, Vec<usize>> = BTreeMap::new();
    for (i, r) in corpus.rows.iter().enumerate() {
        groups.entry(&r.label).or_default().push(i);
    }
    let target = groups.values().map(Vec::len).min().expect("non-empty");
    let mut rng = rng(seed);
    let mut keep: Vec<usize> = Vec::with_capacity(target * groups.len());
    for idx in groups.values_mut() {
        idx.shuffle(&mut rng);
        keep.extend_from_slice(&idx[..target]);
    }
    keep.sort_unstable();
    Ok(LabeledCorpus {
        rows: keep.into_iter().map(|i| corpus.rows[i].clone()).collect(),
    })
}

/// Seeded shuffle into `round(n * train_fraction)` training rows (at least
/// one on each side when `n >= 2`) and the rest for testing.
pub fn split(corpus: &LabeledCorpus, train_fraction: f64, seed: u64) -> Result<(LabeledCorpus, LabeledCorpus), PredictorError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(PredictorError::BadParameter(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let n = corpus.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(seed));
    let mut n_train = (n as f64 * train_fraction).round() as usize;
    if n >= 2 {
        n_train = n_train.clamp(1, n - 1);
    }
    let pick = |idx: &[usize]| LabeledCorpus {
        rows: idx.iter().map(|&i| corpus.rows[i].clone()).collect(),
    };
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyReport {
    pub kind: ClassifierKind,
    pub accuracy: f64,
    pub baseline_accuracy: f64,
    pub delta: f64,
    /// `(actual, predicted) -> count`.
    pub confusion: BTreeMap<(NetworkId, NetworkId), usize>,
}

pub fn accuracy(model: &ClassifierModel, test: &LabeledCorpus) -> f64 {
    let hits = test
        .rows
        .par_iter()
        .filter(|r| model.predict(&r.features) == &r.label)
        .count();
    hits as f64 / test.len() as f64
}

/// Top-1 accuracy of `model` on `test`, compared with `baseline` on the same rows.
pub fn evaluate(model: &ClassifierModel, baseline: &ClassifierModel, test: &LabeledCorpus) -> Result<AccuracyReport, PredictorError> {
    if test.is_empty() {
        return Err(PredictorError::DegenerateCorpus("test set is empty".into()));
    }
    let predicted: Vec<&NetworkId> = test.rows.par_iter().map(|r| model.predict(&r.features)).collect();
    let mut confusion = BTreeMap::new();
    let mut hits = 0;
    for (r, p) in test.rows.iter().zip(predicted) {
        hits += usize::from(p == &r.label);
        *confusion.entry((r.label.clone(), p.clone())).or_default() += 1;
    }
    let acc = hits as f64 / test.len() as f64;
    let base = accuracy(baseline, test);
    Ok(AccuracyReport {
        kind: model.kind(),
        accuracy: acc,
        baseline_accuracy: base,
        delta: acc - base,
        confusion,
    })
}

/// `model_kind,accuracy,baseline_accuracy,delta`.
pub fn write_reports_to(reports: &[AccuracyReport], w: &mut impl Write) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["model_kind", "accuracy", "baseline_accuracy", "delta"])?;
    for r in reports {
        out.write_record([
            r.kind.to_string(),
            r.accuracy.to_string(),
            r.baseline_accuracy.to_string(),
            r.delta.to_string(),
        ])?;
    }
    out.flush()
}

/// `actual,predicted,count`.
pub fn write_confusion_to(report: &AccuracyReport, w: &mut impl Write) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["actual", "predicted", "count"])?;
    for ((a, p), c) in &report.confusion {
        out.write_record([a.as_str(), p.as_str(), &c.to_string()])?;
    }
    out.flush()
}

/// A fitted PCA plus classifier, the unit that gets saved and reloaded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    pub pca: PcaModel,
    pub classifier: ClassifierModel,
}

#[derive(Serialize, Deserialize)]
struct SavedPredictor {
    format: String,
    version: u32,
    #[serde(flatten)]
    predictor: Predictor,
}

impl Predictor {
    pub fn predict(&self, features: &[f64]) -> &NetworkId {
        self.classifier.predict(&self.pca.transform(features))
    }

    pub fn to_json(&self) -> String {
        let saved = SavedPredictor {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            predictor: self.clone(),
        };
        serde_json::to_string_pretty(&saved).expect("predictor serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PredictorError> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let h: Header = serde_json::from_str(text).map_err(|e| PredictorError::BadModel(e.to_string()))?;
        if h.format != MODEL_FORMAT {
            return Err(PredictorError::BadModel(format!("unexpected format `{}`", h.format)));
        }
        if h.version != MODEL_VERSION {
            return Err(PredictorError::BadModel(format!(
                "version {} is not supported (expected {MODEL_VERSION})",
                h.version
            )));
        }
        let saved: SavedPredictor = serde_json::from_str(text).map_err(|e| PredictorError::BadModel(e.to_string()))?;
        Ok(saved.predictor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub balance: bool,
    pub train_fraction: f64,
    pub variance_target: f64,
    pub k: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let hp = Hyperparameters::default();
        Self {
            balance: false,
            train_fraction: 0.9,
            variance_target: 0.95,
            k: hp.k,
            max_depth: hp.max_depth,
            min_leaf: hp.min_leaf,
        }
    }
}

impl TrainingConfig {
    pub fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            k: self.k,
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
        }
    }
}

pub struct TrainingOutcome {
    pub train_rows: usize,
    pub test_rows: usize,
    pub predictors: Vec<Predictor>,
    pub reports: Vec<AccuracyReport>,
}

/// Optional balancing, split, PCA fit on the training rows, then one model
/// per kind, each scored against a Majority baseline fit on the same rows.
pub fn run_pipeline(
    corpus: &LabeledCorpus,
    kinds: &[ClassifierKind],
    config: &TrainingConfig,
    seed: u64,
) -> Result<TrainingOutcome, PredictorError> {
    let corpus = if config.balance { balance(corpus, seed)? } else { corpus.clone() };
    let (train_set, test_set) = split(&corpus, config.train_fraction, seed)?;
    if train_set.is_empty() || test_set.is_empty() {
        return Err(PredictorError::DegenerateCorpus(format!(
            "need at least 2 labeled rows, got {}",
            corpus.len()
        )));
    }
    let pca = pca_fit(&train_set.features(), config.variance_target)?;
    let train_z = train_set.map_features(|x| pca.transform(x));
    let test_z = test_set.map_features(|x| pca.transform(x));
    let xs = train_z.features();
    let ys = train_z.labels();
    let hp = config.hyperparameters();
    let baseline = train(ClassifierKind::Majority, &xs, &ys, &hp)?;

    let mut predictors = Vec::new();
    let mut reports = Vec::new();
    for &kind in kinds {
        let model = train(kind, &xs, &ys, &hp)?;
        reports.push(evaluate(&model, &baseline, &test_z)?);
        predictors.push(Predictor {
            pca: pca.clone(),
            classifier: model,
        });
    }
    Ok(TrainingOutcome {
        train_rows: train_set.len(),
        test_rows: test_set.len(),
        predictors,
        reports,
    })
}
