use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::PredictorError;

/// Standardization followed by projection onto the leading principal axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub means: Vec<f64>,
    /// Population standard deviations; 0 marks a constant feature.
    pub stds: Vec<f64>,
    /// Unit-length principal axes, most explanatory first.
    pub components: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&v, (&m, &s))| if s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        let z = self.standardize(x);
        self.components.iter().map(|c| dot(c, &z)).collect()
    }

    /// Maps reduced coordinates back to standardized feature space.
    pub fn inverse_transform(&self, y: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.dim()];
        for (c, &w) in self.components.iter().zip(y) {
            for (zi, &ci) in z.iter_mut().zip(c) {
                *zi += w * ci;
            }
        }
        z
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits on `rows` and keeps components until their cumulative explained
/// variance reaches `variance_target`; a target of 1 keeps every axis.
pub fn pca_fit(rows: &[Vec<f64>], variance_target: f64) -> Result<PcaModel, PredictorError> {
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(PredictorError::BadParameter(format!(
            "variance target must be in (0, 1], got {variance_target}"
        )));
    }
    if rows.len() < 2 {
        return Err(PredictorError::DegenerateCorpus(format!("PCA needs at least 2 rows, got {}", rows.len())));
    }
    let d = rows[0].len();
    let n = rows.len() as f64;
    let mut means = vec![0.0; d];
    for r in rows {
        for (m, &v) in means.iter_mut().zip(r) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut stds = vec![0.0; d];
    for r in rows {
        for ((s, &v), &m) in stds.iter_mut().zip(r).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    stds.iter_mut().for_each(|s| *s = (*s / n).sqrt());

    let partial = PcaModel {
        means,
        stds,
        components: Vec::new(),
        explained_variance_ratio: Vec::new(),
    };
    let z = DMatrix::from_fn(rows.len(), d, |i, j| {
        let s = partial.stds[j];
        if s > 0.0 {
            (rows[i][j] - partial.means[j]) / s
        } else {
            0.0
        }
    });
    let cov = (z.transpose() * &z) / n;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(PredictorError::DegenerateCorpus("every feature is constant".into()));
    }

    let mut model = partial;
    let mut cumulative = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if variance_target < 1.0 && cumulative >= variance_target - 1e-12 {
            break;
        }
        let mut axis: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        // fix the sign so the largest-magnitude entry is positive
        let lead = axis
            .iter()
            .enumerate()
            .fold(0, |best, (j, v)| if v.abs() > axis[best].abs() { j } else { best });
        if axis[lead] < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        let ratio = values[rank] / total;
        cumulative += ratio;
        model.components.push(axis);
        model.explained_variance_ratio.push(ratio);
    }
    Ok(model)
}
