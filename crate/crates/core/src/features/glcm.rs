use super::{FeatureError, GrayImage};

/// Gray levels after quantization (`g >> 5`).
pub const GLCM_LEVELS: usize = 8;

/// Texture statistics of the symmetric, normalized co-occurrence matrix for
/// horizontal neighbors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlcmFeatures {
    pub contrast: f64,
    pub dissimilarity: f64,
    pub homogeneity: f64,
    pub asm: f64,
    pub energy: f64,
    pub correlation: f64,
}

impl GlcmFeatures {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.contrast,
            self.dissimilarity,
            self.homogeneity,
            self.asm,
            self.energy,
            self.correlation,
        ]
    }
}

fn cooccurrence(gray: &GrayImage) -> [[f64; GLCM_LEVELS]; GLCM_LEVELS] {
    let mut counts = [[0u64; GLCM_LEVELS]; GLCM_LEVELS];
    for row in gray.data().chunks_exact(gray.width()) {
        for pair in row.windows(2) {
            let (a, b) = ((pair[0] >> 5) as usize, (pair[1] >> 5) as usize);
            counts[a][b] += 1;
            counts[b][a] += 1;
        }
    }
    let total = (2 * gray.height() * (gray.width() - 1)) as f64;
    counts.map(|row| row.map(|c| c as f64 / total))
}

pub fn glcm_features(gray: &GrayImage) -> Result<GlcmFeatures, FeatureError> {
    gray.require(2, 1)?;
    let p = cooccurrence(gray);

    let mut f = GlcmFeatures {
        contrast: 0.0,
        dissimilarity: 0.0,
        homogeneity: 0.0,
        asm: 0.0,
        energy: 0.0,
        correlation: 0.0,
    };
    // the matrix is symmetric, so row and column marginals coincide
    let mut mu = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let d = i as f64 - j as f64;
            f.contrast += v * d * d;
            f.dissimilarity += v * d.abs();
            f.homogeneity += v / (1.0 + d * d);
            f.asm += v * v;
            mu += i as f64 * v;
        }
    }
    f.energy = f.asm.sqrt();

    let mut var = 0.0;
    let mut cov = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let (di, dj) = (i as f64 - mu, j as f64 - mu);
            var += v * di * di;
            cov += v * di * dj;
        }
    }
    f.correlation = if var == 0.0 { 1.0 } else { cov / var };
    Ok(f)
}
