use super::{FeatureError, GrayImage};

/// Largest Sobel magnitude an 8-bit image can produce: `1020 * sqrt(2)`.
pub const MAX_SOBEL_MAGNITUDE: f64 = 1020.0 * std::f64::consts::SQRT_2;

/// Sobel derivatives, row-major. Border pixels are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gradients {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<i32>,
    pub gy: Vec<i32>,
}

impl Gradients {
    pub fn magnitude(&self, i: usize) -> f64 {
        ((self.gx[i] * self.gx[i] + self.gy[i] * self.gy[i]) as f64).sqrt()
    }

    pub fn is_interior(&self, i: usize) -> bool {
        let (x, y) = (i % self.width, i / self.width);
        x > 0 && y > 0 && x + 1 < self.width && y + 1 < self.height
    }
}

pub fn sobel(gray: &GrayImage) -> Gradients {
    let (w, h) = (gray.width(), gray.height());
    let mut gx = vec![0; w * h];
    let mut gy = vec![0; w * h];
    let p = |x: usize, y: usize| gray.get(x, y) as i32;
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let i = y * w + x;
            gx[i] = (p(x + 1, y - 1) + 2 * p(x + 1, y) + p(x + 1, y + 1)) - (p(x - 1, y - 1) + 2 * p(x - 1, y) + p(x - 1, y + 1));
            gy[i] = (p(x - 1, y + 1) + 2 * p(x, y + 1) + p(x + 1, y + 1)) - (p(x - 1, y - 1) + 2 * p(x, y - 1) + p(x + 1, y - 1));
        }
    }
    Gradients {
        width: w,
        height: h,
        gx,
        gy,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientFeatures {
    /// Interior pixels whose magnitude exceeds the edge threshold.
    pub edge_pixels: usize,
    /// Magnitude-weighted orientation histogram over `[0, 180)` degrees in
    /// 22.5-degree bins, L1-normalized; uniform when there is no gradient.
    pub hog: [f64; 8],
}

/// Unsigned orientation in degrees within `[0, 180)`. The vector is flipped
/// into the upper half-plane first so `(gx, gy)` and `(-gx, -gy)` agree exactly.
pub(crate) fn orientation(gx: i32, gy: i32) -> f64 {
    let (x, y) = if gy < 0 || (gy == 0 && gx < 0) { (-gx, -gy) } else { (gx, gy) };
    let a = (y as f64).atan2(x as f64).to_degrees();
    if a >= 180.0 {
        0.0
    } else {
        a
    }
}

pub fn gradient_features(gray: &GrayImage, edge_fraction: f64) -> Result<GradientFeatures, FeatureError> {
    gray.require(3, 3)?;
    let g = sobel(gray);
    let threshold = edge_fraction * MAX_SOBEL_MAGNITUDE;
    let mut edge_pixels = 0;
    let mut hog = [0.0; 8];
    for y in 1..g.height - 1 {
        for x in 1..g.width - 1 {
            let i = y * g.width + x;
            let m = g.magnitude(i);
            if m > threshold {
                edge_pixels += 1;
            }
            if m > 0.0 {
                let b = ((orientation(g.gx[i], g.gy[i]) / 22.5) as usize).min(7);
                hog[b] += m;
            }
        }
    }
    let total: f64 = hog.iter().sum();
    if total > 0.0 {
        hog.iter_mut().for_each(|v| *v /= total);
    } else {
        hog = [0.125; 8];
    }
    Ok(GradientFeatures { edge_pixels, hog })
}
