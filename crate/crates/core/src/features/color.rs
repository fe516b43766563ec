use super::RasterImage;

/// Normalized color histograms; every group sums to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorHistograms {
    /// 90-degree hue bins. Achromatic pixels count toward bin 0.
    pub hue: [f64; 4],
    pub saturation: [f64; 4],
    pub brightness: [f64; 4],
    pub red: [f64; 8],
    pub green: [f64; 8],
    pub blue: [f64; 8],
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
pub(crate) fn rgb_to_hsv([r, g, b]: [u8; 3]) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let v = max as f64 / 255.0;
    if max == min {
        return (0.0, 0.0, v);
    }
    let chroma = (max - min) as f64;
    let s = chroma / max as f64;
    let (r, g, b) = (r as f64, g as f64, b as f64);
    let h = if max as f64 == r {
        60.0 * ((g - b) / chroma)
    } else if max as f64 == g {
        60.0 * ((b - r) / chroma + 2.0)
    } else {
        60.0 * ((r - g) / chroma + 4.0)
    };
    let h = if h < 0.0 { h + 360.0 } else { h };
    (h, s, v)
}

fn bin(x: f64, width: f64, bins: usize) -> usize {
    ((x / width) as usize).min(bins - 1)
}

pub fn histogram_features(img: &RasterImage) -> ColorHistograms {
    let mut h = ColorHistograms {
        hue: [0.0; 4],
        saturation: [0.0; 4],
        brightness: [0.0; 4],
        red: [0.0; 8],
        green: [0.0; 8],
        blue: [0.0; 8],
    };
    let mut n = 0usize;
    for p in img.pixels().chunks_exact(3) {
        let px = [p[0], p[1], p[2]];
        let (hue, sat, val) = rgb_to_hsv(px);
        h.hue[bin(hue, 90.0, 4)] += 1.0;
        h.saturation[bin(sat, 0.25, 4)] += 1.0;
        h.brightness[bin(val, 0.25, 4)] += 1.0;
        h.red[(px[0] >> 5) as usize] += 1.0;
        h.green[(px[1] >> 5) as usize] += 1.0;
        h.blue[(px[2] >> 5) as usize] += 1.0;
        n += 1;
    }
    let n = n as f64;
    for group in [&mut h.hue[..], &mut h.saturation, &mut h.brightness, &mut h.red, &mut h.green, &mut h.blue] {
        group.iter_mut().for_each(|c| *c /= n);
    }
    h
}
