//! Cheap per-image descriptors used to predict the best network.
//!
//! [`extract_all`] produces a fixed 56-value vector: intensity moments, six
//! GLCM texture statistics, peak/corner/edge counts, aspect ratio, HSV and RGB
//! histograms and an 8-bin gradient orientation histogram.

mod color;
mod glcm;
mod gradient;
mod keypoints;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use color::{histogram_features, ColorHistograms};
pub use glcm::{glcm_features, GlcmFeatures, GLCM_LEVELS};
pub use gradient::{gradient_features, sobel, GradientFeatures, Gradients, MAX_SOBEL_MAGNITUDE};
pub use keypoints::{count_corners, count_peaks, harris_response};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("raster must have a positive size and {expected} bytes, got {width}x{height} with {actual} bytes")]
    BadRaster {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("image is {width}x{height}; this feature needs at least {min_width}x{min_height}")]
    DegenerateImage {
        width: usize,
        height: usize,
        min_width: usize,
        min_height: usize,
    },
    #[error("feature vector must have {FEATURE_COUNT} values, got {0}")]
    WrongLength(usize),
}

/// 8-bit RGB raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, FeatureError> {
        let expected = 3 * width * height;
        if width == 0 || height == 0 || pixels.len() != expected {
            return Err(FeatureError::BadRaster {
                width,
                height,
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self, FeatureError> {
        Self::new(width, height, rgb.repeat(width * height))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn rgb(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn rotate_180(&self) -> Self {
        let pixels = self.pixels.chunks_exact(3).rev().flatten().copied().collect();
        Self {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

/// 8-bit luminance raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, FeatureError> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(FeatureError::BadRaster {
                width,
                height,
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub(crate) fn require(&self, min_width: usize, min_height: usize) -> Result<(), FeatureError> {
        if self.width < min_width || self.height < min_height {
            return Err(FeatureError::DegenerateImage {
                width: self.width,
                height: self.height,
                min_width,
                min_height,
            });
        }
        Ok(())
    }
}

/// `Y = round(0.299 R + 0.587 G + 0.114 B)`, rounding halves up.
pub fn to_grayscale(img: &RasterImage) -> GrayImage {
    let data = img
        .pixels
        .chunks_exact(3)
        .map(|p| ((299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32 + 500) / 1000) as u8)
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Detector thresholds. All are fractions of the largest attainable (or,
/// for Harris, observed) response.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub edge_fraction: f64,
    pub peak_fraction: f64,
    pub harris_k: f64,
    pub harris_threshold: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            edge_fraction: 0.25,
            peak_fraction: 0.5,
            harris_k: 0.04,
            harris_threshold: 0.01,
        }
    }
}

pub const FEATURE_COUNT: usize = 56;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "mean",
    "variance",
    "glcm_contrast",
    "glcm_dissimilarity",
    "glcm_homogeneity",
    "glcm_asm",
    "glcm_energy",
    "glcm_correlation",
    "n_peaks",
    "n_corners",
    "n_edge_pixels",
    "aspect_ratio",
    "hue_hist_0",
    "hue_hist_1",
    "hue_hist_2",
    "hue_hist_3",
    "sat_hist_0",
    "sat_hist_1",
    "sat_hist_2",
    "sat_hist_3",
    "brightness_hist_0",
    "brightness_hist_1",
    "brightness_hist_2",
    "brightness_hist_3",
    "r_hist_0",
    "r_hist_1",
    "r_hist_2",
    "r_hist_3",
    "r_hist_4",
    "r_hist_5",
    "r_hist_6",
    "r_hist_7",
    "g_hist_0",
    "g_hist_1",
    "g_hist_2",
    "g_hist_3",
    "g_hist_4",
    "g_hist_5",
    "g_hist_6",
    "g_hist_7",
    "b_hist_0",
    "b_hist_1",
    "b_hist_2",
    "b_hist_3",
    "b_hist_4",
    "b_hist_5",
    "b_hist_6",
    "b_hist_7",
    "hog_0",
    "hog_1",
    "hog_2",
    "hog_3",
    "hog_4",
    "hog_5",
    "hog_6",
    "hog_7",
];

/// Image descriptor in [`FEATURE_NAMES`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn from_values(values: Vec<f64>) -> Result<Self, FeatureError> {
        if values.len() != FEATURE_COUNT {
            return Err(FeatureError::WrongLength(values.len()));
        }
        Ok(Self { values })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.values[i])
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = FeatureError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::from_values(values)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(v: FeatureVector) -> Self {
        v.values
    }
}

/// Wall-clock cost of each extraction stage.
#[derive(Clone, Debug, Default)]
pub struct FeatureTimings {
    pub grayscale: Duration,
    pub moments: Duration,
    pub glcm: Duration,
    pub peaks: Duration,
    pub corners: Duration,
    pub gradients: Duration,
    pub histograms: Duration,
}

impl FeatureTimings {
    pub fn stages(&self) -> [(&'static str, Duration); 7] {
        [
            ("grayscale", self.grayscale),
            ("moments", self.moments),
            ("glcm", self.glcm),
            ("peaks", self.peaks),
            ("corners", self.corners),
            ("gradients", self.gradients),
            ("histograms", self.histograms),
        ]
    }

    pub fn accumulate(&mut self, other: &FeatureTimings) {
        self.grayscale += other.grayscale;
        self.moments += other.moments;
        self.glcm += other.glcm;
        self.peaks += other.peaks;
        self.corners += other.corners;
        self.gradients += other.gradients;
        self.histograms += other.histograms;
    }
}

fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed();
    out
}

pub fn extract_all(img: &RasterImage, config: &FeatureConfig) -> Result<FeatureVector, FeatureError> {
    extract_all_timed(img, config).map(|(v, _)| v)
}

pub fn extract_all_timed(img: &RasterImage, config: &FeatureConfig) -> Result<(FeatureVector, FeatureTimings), FeatureError> {
    let mut t = FeatureTimings::default();
    let gray = timed(&mut t.grayscale, || to_grayscale(img));
    gray.require(3, 3)?;

    let (mean, variance) = timed(&mut t.moments, || {
        let n = gray.data.len() as f64;
        let mean = gray.data.iter().map(|&v| v as f64).sum::<f64>() / n;
        let variance = gray.data.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        (mean, variance)
    });
    let texture = timed(&mut t.glcm, || glcm_features(&gray))?;
    let peaks = timed(&mut t.peaks, || count_peaks(&gray, config.peak_fraction))?;
    let corners = timed(&mut t.corners, || count_corners(&gray, config.harris_k, config.harris_threshold))?;
    let grad = timed(&mut t.gradients, || gradient_features(&gray, config.edge_fraction))?;
    let hist = timed(&mut t.histograms, || histogram_features(img));

    let mut values = Vec::with_capacity(FEATURE_COUNT);
    values.extend([mean, variance]);
    values.extend(texture.as_array());
    values.extend([
        peaks as f64,
        corners as f64,
        grad.edge_pixels as f64,
        img.width as f64 / img.height as f64,
    ]);
    values.extend(hist.hue);
    values.extend(hist.saturation);
    values.extend(hist.brightness);
    values.extend(hist.red);
    values.extend(hist.green);
    values.extend(hist.blue);
    values.extend(grad.hog);
    Ok((FeatureVector::from_values(values)?, t))
}

/// `image_id` followed by the 56 feature names.
pub fn write_table_to(rows: &[(crate::model::ImageId, FeatureVector)], w: &mut impl std::io::Write) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["image_id"];
    header.extend(FEATURE_NAMES);
    out.write_record(&header)?;
    for (id, v) in rows {
        let mut row = vec![id.to_string()];
        row.extend(v.values.iter().map(|x| x.to_string()));
        out.write_record(&row)?;
    }
    out.flush()
}

pub fn read_table(reader: impl std::io::Read) -> Result<Vec<(crate::model::ImageId, FeatureVector)>, String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
    let expected: Vec<&str> = std::iter::once("image_id").chain(FEATURE_NAMES).collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err("feature table header does not match the 56 feature names".into());
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let row = i + 2;
        let id = rec[0].parse().map_err(|_| format!("row {row}: bad image_id `{}`", &rec[0]))?;
        let values = rec
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| format!("row {row}: non-numeric feature value"))?;
        out.push((id, FeatureVector::from_values(values).map_err(|e| e.to_string())?));
    }
    Ok(out)
}
