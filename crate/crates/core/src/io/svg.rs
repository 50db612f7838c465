//! Dependency-free SVG charts: line/point plots and log-scaled heatmaps.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Style {
    Line,
    Points,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub style: Style,
}

impl Series {
    pub fn line(name: &str, points: Vec<(f64, f64)>, color: &'static str) -> Self {
        Series { name: name.into(), points, color, style: Style::Line }
    }

    pub fn points(name: &str, points: Vec<(f64, f64)>, color: &'static str) -> Self {
        Series { name: name.into(), points, color, style: Style::Points }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Fixed axis ranges; fitted to the data when unset.
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    pub log_y: bool,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    log_y: bool,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let y = if self.log_y { y.max(1e-300).log10() } else { y };
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(hi > lo) {
        let d = lo.abs().max(1.0) * 0.5;
        (lo - d, hi + d)
    } else {
        let d = 0.04 * (hi - lo);
        (lo - d, hi + d)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn axes(out: &mut String, f: &Frame, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r##"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    for t in ticks(f.x.0, f.x.1) {
        let x = f.px(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"##,
            HEIGHT - BOTTOM,
            HEIGHT - BOTTOM + 5.0,
            HEIGHT - BOTTOM + 18.0,
            short(t)
        );
    }
    for t in ticks(f.y.0, f.y.1) {
        let y = HEIGHT - BOTTOM - (t - f.y.0) / (f.y.1 - f.y.0) * (HEIGHT - TOP - BOTTOM);
        let label = if f.log_y { format!("1e{}", t.round()) } else { short(t) };
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{label}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="22" font-size="14" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
        escape(y_label)
    );
}

fn short(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn open() -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">
<rect width="100%" height="100%" fill="white"/>
"#
    )
}

impl Plot {
    pub fn render(&self) -> String {
        let finite = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite() && (!self.log_y || p.1 > 0.0);
        let all: Vec<(f64, f64)> = self.series.iter().flat_map(|s| s.points.iter().filter(finite).copied()).collect();
        let ty = |y: f64| if self.log_y { y.log10() } else { y };
        let x = self.x_range.unwrap_or_else(|| {
            let lo = all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let hi = all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() { padded(lo, hi) } else { (0.0, 1.0) }
        });
        let y = self.y_range.map(|(a, b)| (ty(a), ty(b))).unwrap_or_else(|| {
            let lo = all.iter().map(|p| ty(p.1)).fold(f64::INFINITY, f64::min);
            let hi = all.iter().map(|p| ty(p.1)).fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() { padded(lo, hi) } else { (0.0, 1.0) }
        });
        let f = Frame { x, y, log_y: self.log_y };
        let mut out = open();
        axes(&mut out, &f, &self.title, &self.x_label, &self.y_label);
        let _ = writeln!(
            out,
            r#"<clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{}" height="{}"/></clipPath><g clip-path="url(#plot)">"#,
            WIDTH - LEFT - RIGHT,
            HEIGHT - TOP - BOTTOM
        );
        for s in &self.series {
            let pts: Vec<(f64, f64)> = s.points.iter().filter(finite).map(|&(a, b)| (f.px(a), f.py(b))).collect();
            match s.style {
                Style::Line => {
                    // Break the polyline at missing samples.
                    let mut segment = String::new();
                    for p in &s.points {
                        if finite(&p) {
                            let _ = write!(segment, "{:.1},{:.1} ", f.px(p.0), f.py(p.1));
                        } else if !segment.is_empty() {
                            let _ = writeln!(out, r#"<polyline points="{segment}" fill="none" stroke="{}" stroke-width="1.5"/>"#, s.color);
                            segment.clear();
                        }
                    }
                    if !segment.is_empty() {
                        let _ = writeln!(out, r#"<polyline points="{segment}" fill="none" stroke="{}" stroke-width="1.5"/>"#, s.color);
                    }
                }
                Style::Points => {
                    for (a, b) in pts {
                        let _ = writeln!(out, r#"<circle cx="{a:.1}" cy="{b:.1}" r="2.2" fill="{}"/>"#, s.color);
                    }
                }
            }
        }
        out.push_str("</g>\n");
        for (i, s) in self.series.iter().enumerate() {
            let y = TOP + 14.0 + 14.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="10" height="3" fill="{}"/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
                WIDTH - RIGHT - 130.0,
                y - 4.0,
                s.color,
                WIDTH - RIGHT - 115.0,
                y,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Log-scaled colour map of a non-negative matrix, optionally overlaid with
/// curves.
#[derive(Clone, Debug, Default)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Ascending cell centres.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Row-major, one row per y.
    pub values: Vec<f64>,
    /// Decades shown below the maximum.
    pub decades: f64,
    pub overlay: Vec<Series>,
}

fn colormap(t: f64) -> String {
    // Dark blue through yellow.
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * (1.5 * t - 0.3).clamp(0.0, 1.0)) as u8;
    let g = (255.0 * (1.4 * t - 0.1).clamp(0.0, 1.0).powf(0.8)) as u8;
    let b = (255.0 * (0.5 + 0.8 * t - 1.2 * t * t).clamp(0.0, 1.0)) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

impl Heatmap {
    pub fn render(&self) -> String {
        let nx = self.x.len();
        let ny = self.y.len();
        let mut out = open();
        if nx < 2 || ny < 2 {
            out.push_str("</svg>\n");
            return out;
        }
        let f = Frame { x: (self.x[0], self.x[nx - 1]), y: (self.y[0], self.y[ny - 1]), log_y: false };
        let max = self.values.iter().copied().fold(0.0, f64::max).max(1e-300);
        let decades = if self.decades > 0.0 { self.decades } else { 4.0 };
        // At most ~200 cells per axis keep the file small.
        let sx = nx.div_ceil(200);
        let sy = ny.div_ceil(200);
        let cw = (f.px(self.x[nx - 1]) - f.px(self.x[0])) / nx as f64 * sx as f64;
        let ch = (f.py(self.y[0]) - f.py(self.y[ny - 1])) / ny as f64 * sy as f64;
        for j in (0..ny).step_by(sy) {
            for i in (0..nx).step_by(sx) {
                let mut v = 0.0f64;
                for jj in j..(j + sy).min(ny) {
                    for ii in i..(i + sx).min(nx) {
                        v = v.max(self.values[jj * nx + ii]);
                    }
                }
                let t = 1.0 + (v / max).max(1e-300).log10() / decades;
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    f.px(self.x[i]) - 0.5 * cw / sx as f64,
                    f.py(self.y[j]) - ch + 0.5 * ch / sy as f64,
                    cw + 0.3,
                    ch + 0.3,
                    colormap(t)
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<clipPath id="map"><rect x="{LEFT}" y="{TOP}" width="{}" height="{}"/></clipPath><g clip-path="url(#map)">"#,
            WIDTH - LEFT - RIGHT,
            HEIGHT - TOP - BOTTOM
        );
        for s in &self.overlay {
            for &(a, b) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
                let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="1.2" fill="{}"/>"#, f.px(a), f.py(b), s.color);
            }
        }
        out.push_str("</g>\n");
        axes(&mut out, &f, &self.title, &self.x_label, &self.y_label);
        out.push_str("</svg>\n");
        out
    }
}
