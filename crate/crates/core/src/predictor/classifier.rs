use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PredictorError;
use crate::model::NetworkId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    KNearest,
    DecisionTree,
    Majority,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [ClassifierKind::KNearest, ClassifierKind::DecisionTree, ClassifierKind::Majority];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::KNearest => "knn",
            ClassifierKind::DecisionTree => "tree",
            ClassifierKind::Majority => "majority",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = PredictorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "knn" | "knearest" | "k_nearest" => Ok(ClassifierKind::KNearest),
            "tree" | "decision_tree" | "decisiontree" => Ok(ClassifierKind::DecisionTree),
            "majority" => Ok(ClassifierKind::Majority),
            _ => Err(PredictorError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    pub k: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            k: 5,
            max_depth: 10,
            min_leaf: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        label: NetworkId,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierModel {
    KNearest {
        k: usize,
        points: Vec<Vec<f64>>,
        labels: Vec<NetworkId>,
    },
    DecisionTree {
        max_depth: usize,
        /// Root first.
        nodes: Vec<TreeNode>,
    },
    Majority {
        label: NetworkId,
    },
}

/// Most frequent label; ties go to the smallest label.
fn majority<'a>(labels: impl IntoIterator<Item = &'a NetworkId>) -> Option<&'a NetworkId> {
    let mut counts: BTreeMap<&NetworkId, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    // max_by_key keeps the last maximum, so walk the labels in reverse
    counts.into_iter().rev().max_by_key(|&(_, c)| c).map(|(l, _)| l)
}

pub fn train(
    kind: ClassifierKind,
    features: &[Vec<f64>],
    labels: &[NetworkId],
    hp: &Hyperparameters,
) -> Result<ClassifierModel, PredictorError> {
    if features.is_empty() {
        return Err(PredictorError::DegenerateCorpus("training set is empty".into()));
    }
    if features.len() != labels.len() {
        return Err(PredictorError::BadParameter("feature and label counts differ".into()));
    }
    Ok(match kind {
        ClassifierKind::KNearest => {
            if hp.k == 0 {
                return Err(PredictorError::BadParameter("k must be at least 1".into()));
            }
            ClassifierModel::KNearest {
                k: hp.k,
                points: features.to_vec(),
                labels: labels.to_vec(),
            }
        }
        ClassifierKind::DecisionTree => {
            if hp.min_leaf == 0 {
                return Err(PredictorError::BadParameter("min_leaf must be at least 1".into()));
            }
            ClassifierModel::DecisionTree {
                max_depth: hp.max_depth,
                nodes: grow_tree(features, labels, hp),
            }
        }
        ClassifierKind::Majority => ClassifierModel::Majority {
            label: majority(labels).cloned().expect("non-empty"),
        },
    })
}

impl ClassifierModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierModel::KNearest { .. } => ClassifierKind::KNearest,
            ClassifierModel::DecisionTree { .. } => ClassifierKind::DecisionTree,
            ClassifierModel::Majority { .. } => ClassifierKind::Majority,
        }
    }

    pub fn predict(&self, x: &[f64]) -> &NetworkId {
        match self {
            ClassifierModel::Majority { label } => label,
            ClassifierModel::KNearest { k, points, labels } => {
                let mut near: Vec<(f64, &NetworkId)> = points
                    .iter()
                    .zip(labels)
                    .map(|(p, l)| (p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), l))
                    .collect();
                near.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
                majority(near.iter().take(*k).map(|(_, l)| *l)).expect("stored points are non-empty")
            }
            ClassifierModel::DecisionTree { nodes, .. } => {
                let mut i = 0;
                loop {
                    match &nodes[i] {
                        TreeNode::Leaf { label } => return label,
                        TreeNode::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => i = if x[*feature] <= *threshold { *left } else { *right },
                    }
                }
            }
        }
    }

    /// Longest root-to-leaf path in splits; 0 for non-tree models.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        match self {
            ClassifierModel::DecisionTree { nodes, .. } => walk(nodes, 0),
            _ => 0,
        }
    }
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct TreeBuilder<'a> {
    features: &'a [Vec<f64>],
    classes: Vec<&'a NetworkId>,
    y: Vec<usize>,
    hp: Hyperparameters,
    nodes: Vec<TreeNode>,
}

fn grow_tree(features: &[Vec<f64>], labels: &[NetworkId], hp: &Hyperparameters) -> Vec<TreeNode> {
    let mut classes: Vec<&NetworkId> = labels.iter().collect();
    classes.sort();
    classes.dedup();
    let y = labels
        .iter()
        .map(|l| classes.binary_search(&l).expect("label is a class"))
        .collect();
    let mut b = TreeBuilder {
        features,
        classes,
        y,
        hp: *hp,
        nodes: Vec::new(),
    };
    let all: Vec<usize> = (0..features.len()).collect();
    b.grow(&all, 0);
    b.nodes
}

impl TreeBuilder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.classes.len()];
        for &r in rows {
            c[self.y[r]] += 1;
        }
        c
    }

    /// Best `(feature, threshold, weighted impurity)`; earlier features and
    /// smaller thresholds win ties.
    fn best_split(&self, rows: &[usize]) -> Option<(usize, f64, f64)> {
        let n = rows.len();
        let total = self.counts(rows);
        let dim = self.features[rows[0]].len();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut sorted = rows.to_vec();
        for f in 0..dim {
            sorted.sort_by(|&a, &b| self.features[a][f].total_cmp(&self.features[b][f]));
            let mut left = vec![0; self.classes.len()];
            for i in 0..n - 1 {
                left[self.y[sorted[i]]] += 1;
                let (lo, hi) = (self.features[sorted[i]][f], self.features[sorted[i + 1]][f]);
                let n_left = i + 1;
                if lo == hi || n_left < self.hp.min_leaf || n - n_left < self.hp.min_leaf {
                    continue;
                }
                let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let impurity = (n_left as f64 * gini(&left, n_left) + (n - n_left) as f64 * gini(&right, n - n_left)) / n as f64;
                if best.is_none_or(|(_, _, b)| impurity < b) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some((f, threshold, impurity));
                }
            }
        }
        best
    }

    fn leaf(&mut self, rows: &[usize]) -> usize {
        let label = majority(rows.iter().map(|&r| self.classes[self.y[r]])).expect("rows are non-empty");
        self.nodes.push(TreeNode::Leaf { label: label.clone() });
        self.nodes.len() - 1
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let counts = self.counts(rows);
        let impurity = gini(&counts, rows.len());
        if depth >= self.hp.max_depth || impurity == 0.0 || rows.len() < 2 * self.hp.min_leaf {
            return self.leaf(rows);
        }
        let Some((feature, threshold, split_impurity)) = self.best_split(rows) else {
            return self.leaf(rows);
        };
        if split_impurity >= impurity {
            return self.leaf(rows);
        }
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.features[i][feature] <= threshold);
        let at = self.nodes.len();
        self.nodes.push(TreeNode::Split {
            feature,
            threshold,
            left: 0,
            right: 0,
        });
        let left = self.grow(&l, depth + 1);
        let right = self.grow(&r, depth + 1);
        if let TreeNode::Split { left: a, right: b, .. } = &mut self.nodes[at] {
            *a = left;
            *b = right;
        }
        at
    }
}
