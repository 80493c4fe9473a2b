//! Static SVG line charts for the trace panels.
//!
//! The root element carries `data-y-min` / `data-y-max` with the plotted
//! vertical range so tools and tests can check it without parsing paths.

use std::fmt::Write as _;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 320.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;
/// Above this many samples a series is reduced to per-column min/max pairs.
const MAX_POINTS: usize = 4000;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub label: &'a str,
    pub ys: &'a [f64],
}

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub xs: &'a [f64],
    pub series: Vec<Series<'a>>,
    /// Interval the vertical axis must cover whatever the data do.
    pub y_include: Option<(f64, f64)>,
}

impl Chart<'_> {
    /// Vertical range: the data extent joined with `y_include`, padded when
    /// it collapses to a point.
    pub fn y_range(&self) -> (f64, f64) {
        let (mut lo, mut hi) = self
            .series
            .iter()
            .flat_map(|s| s.ys.iter().copied())
            .filter(|y| y.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| {
                (lo.min(y), hi.max(y))
            });
        if let Some((a, b)) = self.y_include {
            lo = lo.min(a);
            hi = hi.max(b);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            let pad = if lo.abs() > 1e-12 {
                0.05 * lo.abs()
            } else {
                1.0
            };
            return (lo - pad, hi + pad);
        }
        (lo, hi)
    }

    pub fn x_range(&self) -> (f64, f64) {
        match (self.xs.first(), self.xs.last()) {
            (Some(&a), Some(&b)) if b > a => (a, b),
            (Some(&a), _) => (a, a + 1.0),
            _ => (0.0, 1.0),
        }
    }

    pub fn render(&self) -> String {
        let (x0, x1) = self.x_range();
        let (y0, y1) = self.y_range();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12" data-y-min="{y0}" data-y-max="{y1}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(self.title)
        );

        for t in nice_ticks(y0, y1, 6) {
            let y = sy(t);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        for t in nice_ticks(x0, x1, 8) {
            let x = sx(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#f0f0f0"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                TOP + ph,
                TOP + ph + 16.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 10.0,
            escape(self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + ph / 2.0,
            escape(self.y_label)
        );

        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let mut pts = String::new();
            for (x, y) in decimate(self.xs, series.ys) {
                let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(y));
            }
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                pts.trim_end()
            );
            if self.series.len() > 1 {
                let ly = TOP + 14.0 + 16.0 * k as f64;
                let lx = LEFT + pw - 150.0;
                let _ = writeln!(
                    s,
                    r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                    lx + 20.0,
                    lx + 26.0,
                    ly + 4.0,
                    escape(series.label)
                );
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Keeps every point of short series. Longer ones keep, per column of
/// samples, the first, the minimum and the maximum, so spikes survive.
fn decimate(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    let n = xs.len().min(ys.len());
    let finite = |i: usize| ys[i].is_finite();
    if n <= MAX_POINTS {
        return (0..n)
            .filter(|&i| finite(i))
            .map(|i| (xs[i], ys[i]))
            .collect();
    }
    let buckets = MAX_POINTS / 3;
    let mut out = Vec::with_capacity(3 * buckets);
    for b in 0..buckets {
        let (start, end) = (b * n / buckets, (b + 1) * n / buckets);
        let idx: Vec<usize> = (start..end).filter(|&i| finite(i)).collect();
        let Some(&first) = idx.first() else { continue };
        let lo = *idx
            .iter()
            .min_by(|&&a, &&b| ys[a].total_cmp(&ys[b]))
            .unwrap();
        let hi = *idx
            .iter()
            .max_by(|&&a, &&b| ys[a].total_cmp(&ys[b]))
            .unwrap();
        let mut keep = [first, lo, hi];
        keep.sort_unstable();
        let mut last = usize::MAX;
        for i in keep {
            if i != last {
                out.push((xs[i], ys[i]));
                last = i;
            }
        }
    }
    out
}

/// Round-valued ticks (1, 2 or 5 times a power of ten) covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if hi.is_nan() || lo.is_nan() || hi <= lo || target == 0 {
        return vec![lo];
    }
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(t: f64) -> String {
    let t = if t.abs() < 1e-12 { 0.0 } else { t };
    let s = format!("{t:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
