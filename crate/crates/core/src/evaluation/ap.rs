use crate::model::Score;

/// Number of recall sample points, `0.00, 0.01, ..., 1.00`.
pub const RECALL_POINTS: usize = 101;

/// One detection's contribution to a precision–recall curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredFlag {
    pub score: f64,
    pub true_positive: bool,
}

impl ScoredFlag {
    pub fn tp(score: f64) -> Self {
        Self { score, true_positive: true }
    }

    pub fn fp(score: f64) -> Self {
        Self { score, true_positive: false }
    }
}

/// 101-point interpolated average precision.
///
/// Flags are ranked by descending score; equal scores keep their input order.
/// Precision is made non-increasing from the right, then sampled at each
/// recall point as the precision of the first curve point reaching it (zero
/// if recall never gets there).
pub fn average_precision(flags: &[ScoredFlag], total_positives: usize) -> Score {
    if total_positives == 0 {
        return Score::NoGroundTruth;
    }
    let mut ranked: Vec<&ScoredFlag> = flags.iter().collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));

    let npos = total_positives as f64;
    let mut recall = Vec::with_capacity(ranked.len());
    let mut precision = Vec::with_capacity(ranked.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for f in ranked {
        if f.true_positive {
            tp += 1;
        } else {
            fp += 1;
        }
        recall.push(tp as f64 / npos);
        precision.push(tp as f64 / (tp + fp) as f64);
    }
    for i in (1..precision.len()).rev() {
        if precision[i] > precision[i - 1] {
            precision[i - 1] = precision[i];
        }
    }

    let mut sum = 0.0;
    let mut cursor = 0;
    for r in 0..RECALL_POINTS {
        let target = r as f64 / (RECALL_POINTS - 1) as f64;
        while cursor < recall.len() && recall[cursor] < target {
            cursor += 1;
        }
        if cursor == recall.len() {
            break;
        }
        sum += precision[cursor];
    }
    Score::Value(sum / RECALL_POINTS as f64)
}
