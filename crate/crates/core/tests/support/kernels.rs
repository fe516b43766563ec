//! Naive loop references for the image feature kernels.

use std::collections::HashMap;

pub fn ref_gray(rgb: &[u8]) -> Vec<u8> {
    rgb.chunks(3)
        .map(|p| {
            let y = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
            // half-up rounding with a guard for representation error
            (y + 0.5 + 1e-9).floor().min(255.0) as u8
        })
        .collect()
}

/// `[contrast, dissimilarity, homogeneity, asm, energy, correlation]`.
pub fn ref_glcm(gray: &[u8], w: usize, h: usize) -> [f64; 6] {
    let mut counts: HashMap<(i64, i64), f64> = HashMap::new();
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w - 1 {
            let a = (gray[y * w + x] / 32) as i64;
            let b = (gray[y * w + x + 1] / 32) as i64;
            *counts.entry((a, b)).or_default() += 1.0;
            *counts.entry((b, a)).or_default() += 1.0;
            total += 2.0;
        }
    }
    let p = |i: i64, j: i64| counts.get(&(i, j)).copied().unwrap_or(0.0) / total;
    let (mut con, mut dis, mut hom, mut asm) = (0.0, 0.0, 0.0, 0.0);
    let (mut mi, mut mj) = (0.0, 0.0);
    for i in 0..8 {
        for j in 0..8 {
            let v = p(i, j);
            con += v * ((i - j) * (i - j)) as f64;
            dis += v * (i - j).abs() as f64;
            hom += v / (1.0 + ((i - j) * (i - j)) as f64);
            asm += v * v;
            mi += v * i as f64;
            mj += v * j as f64;
        }
    }
    let (mut si, mut sj, mut cov) = (0.0, 0.0, 0.0);
    for i in 0..8 {
        for j in 0..8 {
            let v = p(i, j);
            si += v * (i as f64 - mi).powi(2);
            sj += v * (j as f64 - mj).powi(2);
            cov += v * (i as f64 - mi) * (j as f64 - mj);
        }
    }
    let denom = si.sqrt() * sj.sqrt();
    let corr = if denom == 0.0 { 1.0 } else { cov / denom };
    [con, dis, hom, asm, asm.sqrt(), corr]
}

const KX: [[i64; 3]; 3] = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]];
const KY: [[i64; 3]; 3] = [[-1, -2, -1], [0, 0, 0], [1, 2, 1]];

/// Sobel by explicit kernel correlation; zero on the border.
pub fn ref_sobel(gray: &[u8], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let (mut sx, mut sy) = (0i64, 0i64);
            for ky in 0..3 {
                for kx in 0..3 {
                    let v = gray[(y + ky - 1) * w + (x + kx - 1)] as i64;
                    sx += KX[ky][kx] * v;
                    sy += KY[ky][kx] * v;
                }
            }
            gx[y * w + x] = sx as f64;
            gy[y * w + x] = sy as f64;
        }
    }
    (gx, gy)
}

pub fn ref_harris(gray: &[u8], w: usize, h: usize, k: f64) -> Vec<f64> {
    let (gx, gy) = ref_sobel(gray, w, h);
    let mut r = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let i = ny as usize * w + nx as usize;
                    a += gx[i] * gx[i];
                    b += gy[i] * gy[i];
                    c += gx[i] * gy[i];
                }
            }
            r[y as usize * w + x as usize] = (a * b - c * c) - k * (a + b).powi(2);
        }
    }
    r
}

/// `(edge count, hog)` from the naive Sobel maps.
pub fn ref_gradient(gray: &[u8], w: usize, h: usize, edge_fraction: f64) -> (usize, [f64; 8]) {
    let (gx, gy) = ref_sobel(gray, w, h);
    let limit = edge_fraction * 1020.0 * 2f64.sqrt();
    let mut edges = 0;
    let mut hog = [0.0; 8];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            let m = (gx[i] * gx[i] + gy[i] * gy[i]).sqrt();
            if m > limit {
                edges += 1;
            }
            if m == 0.0 {
                continue;
            }
            let (ux, uy) = if gy[i] < 0.0 || (gy[i] == 0.0 && gx[i] < 0.0) {
                (-gx[i], -gy[i])
            } else {
                (gx[i], gy[i])
            };
            let mut deg = uy.atan2(ux).to_degrees();
            if deg >= 180.0 {
                deg = 0.0;
            }
            hog[((deg / 22.5).floor() as usize).min(7)] += m;
        }
    }
    let s: f64 = hog.iter().sum();
    if s == 0.0 {
        return (edges, [0.125; 8]);
    }
    (edges, hog.map(|v| v / s))
}
