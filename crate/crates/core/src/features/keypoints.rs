use super::{sobel, FeatureError, GrayImage};

/// Offsets of the 3x3 neighborhood, excluding the center, in raster order.
const NEIGHBORS: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

fn neighbors(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize, bool)> {
    NEIGHBORS.iter().filter_map(move |&(dx, dy)| {
        let nx = x.checked_add_signed(dx)?;
        let ny = y.checked_add_signed(dy)?;
        // `true` when the neighbor precedes (x, y) in raster order
        (nx < w && ny < h).then_some((nx, ny, dy < 0 || (dy == 0 && dx < 0)))
    })
}

/// Pixels that are strictly brighter than every neighbor and at least
/// `fraction * 255`. Neighborhoods are clipped at the border.
pub fn count_peaks(gray: &GrayImage, fraction: f64) -> Result<usize, FeatureError> {
    let (w, h) = (gray.width(), gray.height());
    let floor = fraction * 255.0;
    let mut count = 0;
    for y in 0..h {
        for x in 0..w {
            let v = gray.get(x, y);
            if (v as f64) >= floor && neighbors(x, y, w, h).all(|(nx, ny, _)| v > gray.get(nx, ny)) {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Harris response `det(M) - k trace(M)^2`, with `M` the Sobel structure
/// tensor summed over each pixel's clipped 3x3 window.
pub fn harris_response(gray: &GrayImage, k: f64) -> Vec<f64> {
    let (w, h) = (gray.width(), gray.height());
    let g = sobel(gray);
    let n = w * h;
    let mut xx = vec![0.0; n];
    let mut yy = vec![0.0; n];
    let mut xy = vec![0.0; n];
    for i in 0..n {
        let (gx, gy) = (g.gx[i] as f64, g.gy[i] as f64);
        xx[i] = gx * gx;
        yy[i] = gy * gy;
        xy[i] = gx * gy;
    }
    let mut r = vec![0.0; n];
    for y in 0..h {
        for x in 0..w {
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for ny in y.saturating_sub(1)..(y + 2).min(h) {
                for nx in x.saturating_sub(1)..(x + 2).min(w) {
                    let j = ny * w + nx;
                    a += xx[j];
                    b += yy[j];
                    c += xy[j];
                }
            }
            // every term but the final scaling is an exact integer in f64
            let trace = a + b;
            r[y * w + x] = (a * b - c * c) - k * (trace * trace);
        }
    }
    r
}

/// Harris corners: local maxima of the response above `threshold` times the
/// image maximum. On plateaus the first pixel in raster order wins.
pub fn count_corners(gray: &GrayImage, k: f64, threshold: f64) -> Result<usize, FeatureError> {
    gray.require(3, 3)?;
    let (w, h) = (gray.width(), gray.height());
    let r = harris_response(gray, k);
    let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return Ok(0);
    }
    let floor = threshold * max;
    let mut count = 0;
    for y in 0..h {
        for x in 0..w {
            let v = r[y * w + x];
            if v <= floor {
                continue;
            }
            let is_max = neighbors(x, y, w, h).all(|(nx, ny, before)| {
                let u = r[ny * w + nx];
                if before {
                    v > u
                } else {
                    v >= u
                }
            });
            if is_max {
                count += 1;
            }
        }
    }
    Ok(count)
}
