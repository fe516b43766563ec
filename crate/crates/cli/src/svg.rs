//! Minimal deterministic SVG charts.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(out: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        w / 2.0,
        escape(title)
    );
}

/// Linear or log10 axis mapping a data range onto pixels.
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
    from: f64,
    to: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64> + Clone, from: f64, to: f64, allow_log: bool) -> Self {
        let lo = values.clone().fold(f64::INFINITY, f64::min);
        let hi = values.fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
        let log = allow_log && lo > 0.0 && hi / lo >= 20.0;
        let (lo, hi) = if log { (lo.log10(), hi.log10()) } else { (lo, hi) };
        let pad = if hi > lo { (hi - lo) * 0.05 } else { 0.5 };
        Self {
            lo: lo - pad,
            hi: hi + pad,
            log,
            from,
            to,
        }
    }

    fn fixed(lo: f64, hi: f64, from: f64, to: f64) -> Self {
        Self {
            lo,
            hi,
            log: false,
            from,
            to,
        }
    }

    fn map(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        self.from + (v - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=4)
            .map(|i| {
                let t = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                if self.log {
                    10f64.powf(t)
                } else {
                    t
                }
            })
            .collect()
    }
}

fn tick_label(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else if v.abs() >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.2}")
    }
}

fn axes(out: &mut String, x: &Axis, y: &Axis, x_label: &str, y_label: &str) {
    let (x0, x1, y0, y1) = (x.from, x.to, y.from, y.to);
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" fill="none" stroke="black"/>"#
    );
    for t in x.ticks() {
        let px = x.map(t);
        let _ = writeln!(
            out,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            y0 + 16.0,
            tick_label(t)
        );
    }
    for t in y.ticks() {
        let py = y.map(t);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            py + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}{}</text>"#,
        (x0 + x1) / 2.0,
        y0 + 36.0,
        escape(x_label),
        if x.log { " (log scale)" } else { "" }
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate({:.1},{:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        x0 - 44.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Marker {
    Circle,
    Square,
    Triangle,
    Diamond,
    Cross,
}

impl Marker {
    fn draw(self, out: &mut String, x: f64, y: f64, r: f64, fill: &str, stroke: &str) {
        let _ = match self {
            Marker::Circle => writeln!(
                out,
                r#"<circle cx="{x:.1}" cy="{y:.1}" r="{r:.1}" fill="{fill}" stroke="{stroke}"/>"#
            ),
            Marker::Square => writeln!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{fill}" stroke="{stroke}"/>"#,
                x - r,
                y - r,
                2.0 * r,
                2.0 * r
            ),
            Marker::Triangle => writeln!(
                out,
                r#"<path d="M{x:.1},{:.1} L{:.1},{:.1} L{:.1},{:.1} Z" fill="{fill}" stroke="{stroke}"/>"#,
                y - r,
                x + r,
                y + r,
                x - r,
                y + r
            ),
            Marker::Diamond => writeln!(
                out,
                r#"<path d="M{x:.1},{:.1} L{:.1},{y:.1} L{x:.1},{:.1} L{:.1},{y:.1} Z" fill="{fill}" stroke="{stroke}"/>"#,
                y - r,
                x + r,
                y + r,
                x - r
            ),
            Marker::Cross => writeln!(
                out,
                r#"<path d="M{:.1},{:.1} L{:.1},{:.1} M{:.1},{:.1} L{:.1},{:.1}" stroke="{fill}" stroke-width="2"/>"#,
                x - r,
                y - r,
                x + r,
                y + r,
                x - r,
                y + r,
                x + r,
                y - r
            ),
        };
    }
}

pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    /// Marker radius in pixels.
    pub radius: f64,
    pub marker: Marker,
    /// Index into the series legend, which sets the color.
    pub series: usize,
    pub highlight: bool,
}

/// Scatter with per-point marker shape and size. Highlighted points are
/// joined by a step line in x order.
pub fn scatter(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[String],
    markers: &[(Marker, String)],
    points: &[ScatterPoint],
) -> String {
    let legend_w = 200.0;
    let w = WIDTH + legend_w;
    let mut out = String::new();
    open(&mut out, w, HEIGHT, title);
    let x = Axis::new(points.iter().map(|p| p.x), MARGIN, WIDTH - 20.0, true);
    let y = Axis::new(points.iter().map(|p| p.y), HEIGHT - MARGIN, 40.0, false);
    axes(&mut out, &x, &y, x_label, y_label);

    let mut front: Vec<&ScatterPoint> = points.iter().filter(|p| p.highlight).collect();
    front.sort_by(|a, b| a.x.total_cmp(&b.x));
    if front.len() > 1 {
        let mut d = String::new();
        for (i, p) in front.iter().enumerate() {
            let (px, py) = (x.map(p.x), y.map(p.y));
            if i == 0 {
                let _ = write!(d, "M{px:.1},{py:.1}");
            } else {
                let _ = write!(d, " L{px:.1},{:.1} L{px:.1},{py:.1}", y.map(front[i - 1].y));
            }
        }
        let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="black" stroke-dasharray="4,3"/>"#);
    }
    for p in points {
        let color = PALETTE[p.series % PALETTE.len()];
        let stroke = if p.highlight { "black" } else { "none" };
        p.marker.draw(&mut out, x.map(p.x), y.map(p.y), p.radius, color, stroke);
    }

    let lx = WIDTH + 10.0;
    let mut ly = 50.0;
    for (i, name) in series.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<rect x="{lx:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{ly:.1}">{}</text>"#,
            ly - 9.0,
            PALETTE[i % PALETTE.len()],
            lx + 16.0,
            escape(name)
        );
        ly += 16.0;
    }
    ly += 10.0;
    for (m, name) in markers {
        m.draw(&mut out, lx + 5.0, ly - 4.0, 5.0, "#555555", "none");
        let _ = writeln!(out, r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#, lx + 16.0, escape(name));
        ly += 16.0;
    }
    out.push_str("</svg>\n");
    out
}

/// Pie chart of labeled shares; shares need not be normalized.
pub fn pie(title: &str, slices: &[(String, f64)]) -> String {
    let mut out = String::new();
    open(&mut out, WIDTH, HEIGHT, title);
    let total: f64 = slices.iter().map(|(_, v)| v).sum();
    let (cx, cy, r) = (240.0, 250.0, 180.0);
    let mut angle = -std::f64::consts::FRAC_PI_2;
    for (i, (name, v)) in slices.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let frac = if total > 0.0 { v / total } else { 0.0 };
        if frac >= 1.0 {
            let _ = writeln!(out, r#"<circle cx="{cx}" cy="{cy}" r="{r}" fill="{color}"/>"#);
        } else if frac > 0.0 {
            let end = angle + frac * std::f64::consts::TAU;
            let large = i32::from(frac > 0.5);
            let _ = writeln!(
                out,
                r#"<path d="M{cx},{cy} L{:.2},{:.2} A{r},{r} 0 {large} 1 {:.2},{:.2} Z" fill="{color}" stroke="white"/>"#,
                cx + r * angle.cos(),
                cy + r * angle.sin(),
                cx + r * end.cos(),
                cy + r * end.sin()
            );
            angle = end;
        }
        let ly = 80.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="450" y="{:.1}" width="10" height="10" fill="{color}"/><text x="466" y="{ly:.1}">{} ({:.1}%)</text>"#,
            ly - 9.0,
            escape(name),
            100.0 * frac
        );
    }
    out.push_str("</svg>\n");
    out
}

pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

/// Stacked time-series panels sharing the x axis (frame index). Vertical
/// markers are drawn at `events` in every panel.
pub fn time_series(title: &str, panels: &[(String, Vec<Series>)], events: &[(u64, String)]) -> String {
    let panel_h = 180.0;
    let h = 60.0 + panel_h * panels.len() as f64 + 40.0;
    let mut out = String::new();
    open(&mut out, WIDTH + 160.0, h, title);
    let n = panels
        .iter()
        .flat_map(|(_, s)| s.iter().map(|s| s.values.len()))
        .max()
        .unwrap_or(0);
    let mut color = 0;
    for (pi, (label, series)) in panels.iter().enumerate() {
        let top = 50.0 + panel_h * pi as f64;
        let bottom = top + panel_h - 40.0;
        let x = Axis::fixed(0.0, n.saturating_sub(1).max(1) as f64, MARGIN + 10.0, WIDTH - 20.0);
        let y = Axis::new(series.iter().flat_map(|s| s.values.iter().copied()), bottom, top, false);
        axes(&mut out, &x, &y, if pi + 1 == panels.len() { "frame" } else { "" }, label);
        for (frame, name) in events {
            let px = x.map(*frame as f64);
            let _ = writeln!(
                out,
                r#"<line x1="{px:.1}" y1="{top:.1}" x2="{px:.1}" y2="{bottom:.1}" stroke="gray" stroke-dasharray="3,3"/><text x="{:.1}" y="{:.1}" fill="gray">{}</text>"#,
                px + 3.0,
                top + 10.0,
                escape(name)
            );
        }
        for (si, s) in series.iter().enumerate() {
            let c = PALETTE[color % PALETTE.len()];
            color += 1;
            let mut d = String::new();
            for (i, v) in s.values.iter().enumerate() {
                let _ = write!(d, "{}{:.1},{:.1}", if i == 0 { "M" } else { " L" }, x.map(i as f64), y.map(*v));
            }
            let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{c}" stroke-width="1.5"/>"#);
            let ly = top + 14.0 + 16.0 * si as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{c}"/><text x="{:.1}" y="{ly:.1}">{}</text>"#,
                WIDTH,
                ly - 9.0,
                WIDTH + 16.0,
                escape(&s.name)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Vertical bars in `[0, 1]` with a dashed reference line.
pub fn bars(title: &str, y_label: &str, bars: &[(String, f64)], reference: Option<(&str, f64)>) -> String {
    let mut out = String::new();
    open(&mut out, WIDTH, HEIGHT, title);
    let x = Axis::fixed(0.0, bars.len().max(1) as f64, MARGIN + 10.0, WIDTH - 20.0);
    let y = Axis::fixed(0.0, 1.0, HEIGHT - MARGIN, 40.0);
    let (y0, y1) = (y.from, y.to);
    let _ = writeln!(
        out,
        r#"<path d="M{:.1},{y1:.1} L{:.1},{y0:.1} L{:.1},{y0:.1}" fill="none" stroke="black"/>"#,
        x.from, x.from, x.to
    );
    for t in y.ticks() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x.from - 6.0,
            y.map(t) + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text transform="translate({:.1},{:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        x.from - 44.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
    for (i, (name, v)) in bars.iter().enumerate() {
        let left = x.map(i as f64 + 0.15);
        let right = x.map(i as f64 + 0.85);
        let top = y.map(v.clamp(0.0, 1.0));
        let _ = writeln!(
            out,
            r#"<rect x="{left:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
            right - left,
            y0 - top,
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{} ({:.3})</text>"#,
            (left + right) / 2.0,
            y0 + 16.0,
            escape(name),
            v
        );
    }
    if let Some((name, v)) = reference {
        let py = y.map(v);
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="black" stroke-dasharray="6,4"/><text x="{:.1}" y="{:.1}" text-anchor="end">{} ({:.3})</text>"#,
            x.from,
            x.to,
            x.to,
            py - 4.0,
            escape(name),
            v
        );
    }
    out.push_str("</svg>\n");
    out
}
