//! Static SVG plots: time series with saturation lines and a top-down
//! harbor view with the region, the track and vessel outlines along it.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use nalgebra::Vector2;

use crate::geometry::ConvexPolygon;
use crate::vessel::rotation_planar;

const WIDTH: f64 = 840.0;
const HEIGHT: f64 = 560.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 52.0;

pub const SERIES_COLORS: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

/// Dashed horizontal marker (saturation / bound lines).
#[derive(Debug, Clone)]
pub struct HLine {
    pub y: f64,
    pub label: String,
}

fn nice_step(range: f64) -> f64 {
    if !(range > 0.0) {
        return 1.0;
    }
    let raw = range / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    step * mag
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn from_bounds(mut x0: f64, mut x1: f64, mut y0: f64, mut y1: f64) -> Self {
        if !(x1 > x0) {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if !(y1 > y0) {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad_y = 0.05 * (y1 - y0);
        Self {
            x0,
            x1,
            y0: y0 - pad_y,
            y1: y1 + pad_y,
        }
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn sy(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_B - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn svg_header(buf: &mut String, title: &str) {
    let _ = writeln!(
        buf,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        buf,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        buf,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        title
    );
}

fn axes(buf: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    // Grid and ticks.
    let xstep = nice_step(frame.x1 - frame.x0);
    let mut x = (frame.x0 / xstep).ceil() * xstep;
    while x <= frame.x1 + 1e-9 {
        let sx = frame.sx(x);
        let _ = writeln!(
            buf,
            r##"<line x1="{sx:.1}" y1="{}" x2="{sx:.1}" y2="{}" stroke="#dddddd"/>"##,
            frame.sy(frame.y0),
            frame.sy(frame.y1)
        );
        let _ = writeln!(
            buf,
            r#"<text x="{sx:.1}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_B + 16.0,
            trim_tick(x)
        );
        x += xstep;
    }
    let ystep = nice_step(frame.y1 - frame.y0);
    let mut y = (frame.y0 / ystep).ceil() * ystep;
    while y <= frame.y1 + 1e-9 {
        let sy = frame.sy(y);
        let _ = writeln!(
            buf,
            r##"<line x1="{}" y1="{sy:.1}" x2="{}" y2="{sy:.1}" stroke="#dddddd"/>"##,
            frame.sx(frame.x0),
            frame.sx(frame.x1)
        );
        let _ = writeln!(
            buf,
            r#"<text x="{}" y="{sy:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN_L - 6.0,
            trim_tick(y)
        );
        y += ystep;
    }
    // Frame box and labels.
    let _ = writeln!(
        buf,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        MARGIN_L,
        MARGIN_T,
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    );
    let _ = writeln!(
        buf,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0,
        x_label
    );
    let _ = writeln!(
        buf,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        y_label
    );
}

fn trim_tick(v: f64) -> String {
    if v.abs() < 1e-12 {
        return "0".to_string();
    }
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn polyline(buf: &mut String, pts: &[(f64, f64)], color: &str, width: f64, dashed: bool) {
    if pts.is_empty() {
        return;
    }
    let mut d = String::new();
    for (i, (x, y)) in pts.iter().enumerate() {
        let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "" } else { "" });
    }
    let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = writeln!(
        buf,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>"#,
        d.trim_end()
    );
}

/// Time-series chart with optional dashed bound lines.
pub fn line_chart(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    hlines: &[HLine],
) -> std::io::Result<()> {
    let mut x0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y0 = f64::INFINITY;
    let mut y1 = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    for h in hlines {
        y0 = y0.min(h.y);
        y1 = y1.max(h.y);
    }
    if !x0.is_finite() {
        x0 = 0.0;
        x1 = 1.0;
        y0 = 0.0;
        y1 = 1.0;
    }
    let frame = Frame::from_bounds(x0, x1, y0, y1);

    let mut buf = String::new();
    svg_header(&mut buf, title);
    axes(&mut buf, &frame, x_label, y_label);
    for h in hlines {
        let sy = frame.sy(h.y);
        let _ = writeln!(
            buf,
            r##"<line x1="{}" y1="{sy:.1}" x2="{}" y2="{sy:.1}" stroke="#d62728" stroke-dasharray="4 4"/>"##,
            frame.sx(frame.x0),
            frame.sx(frame.x1)
        );
        let _ = writeln!(
            buf,
            r##"<text x="{}" y="{:.1}" font-family="sans-serif" font-size="10" fill="#d62728" text-anchor="end">{}</text>"##,
            frame.sx(frame.x1) - 4.0,
            sy - 3.0,
            h.label
        );
    }
    for s in series {
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .map(|&(x, y)| (frame.sx(x), frame.sy(y)))
            .collect();
        polyline(&mut buf, &pts, &s.color, 1.6, false);
    }
    // Legend.
    for (i, s) in series.iter().enumerate() {
        let y = MARGIN_T + 16.0 + 16.0 * i as f64;
        let x = WIDTH - MARGIN_R - 150.0;
        let _ = writeln!(
            buf,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/>"#,
            x + 22.0,
            s.color
        );
        let _ = writeln!(
            buf,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            x + 28.0,
            y + 4.0,
            s.label
        );
    }
    buf.push_str("</svg>\n");
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(buf.as_bytes())
}

/// Top-down harbor view in NED: east on the horizontal axis, north on the
/// vertical, equal aspect. Draws the operating region, the track, the dock
/// pose and safety-polygon outlines along the track.
pub fn harbor_plot(
    path: &Path,
    title: &str,
    region: Option<&ConvexPolygon>,
    safety: &ConvexPolygon,
    track: &[(f64, f64, f64)],
    dock: (f64, f64, f64),
) -> std::io::Result<()> {
    let mut bounds = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    let include = |b: &mut [f64; 4], x: f64, y: f64| {
        b[0] = b[0].min(x);
        b[1] = b[1].max(x);
        b[2] = b[2].min(y);
        b[3] = b[3].max(y);
    };
    if let Some(r) = region {
        for v in r.vertices() {
            include(&mut bounds, v.x, v.y);
        }
    }
    for &(x, y, _) in track {
        include(&mut bounds, x, y);
    }
    include(&mut bounds, dock.0, dock.1);
    if !bounds[0].is_finite() {
        include(&mut bounds, -100.0, -100.0);
        include(&mut bounds, 100.0, 100.0);
    }
    let [mut n0, mut n1, mut e0, mut e1] = bounds;
    let pad = 0.06 * ((n1 - n0).max(e1 - e0)).max(1.0);
    n0 -= pad;
    n1 += pad;
    e0 -= pad;
    e1 += pad;

    let avail_w = WIDTH - MARGIN_L - MARGIN_R;
    let avail_h = HEIGHT - MARGIN_T - MARGIN_B;
    let scale = (avail_w / (e1 - e0)).min(avail_h / (n1 - n0));
    let sx = |e: f64| MARGIN_L + (e - e0) * scale;
    let sy = |n: f64| HEIGHT - MARGIN_B - (n - n0) * scale;

    let outline = |pose: (f64, f64, f64)| -> Vec<(f64, f64)> {
        let rot = rotation_planar(pose.2);
        let p = Vector2::new(pose.0, pose.1);
        let mut pts: Vec<(f64, f64)> = safety
            .vertices()
            .iter()
            .map(|v| {
                let w = rot * v + p;
                (sx(w.y), sy(w.x))
            })
            .collect();
        if let Some(first) = pts.first().copied() {
            pts.push(first);
        }
        pts
    };

    let mut buf = String::new();
    svg_header(&mut buf, title);
    let _ = writeln!(
        buf,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">east [m]</text>"#,
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        buf,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">north [m]</text>"#,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0
    );

    if let Some(r) = region {
        let mut pts: Vec<(f64, f64)> = r.vertices().iter().map(|v| (sx(v.y), sy(v.x))).collect();
        if let Some(first) = pts.first().copied() {
            pts.push(first);
        }
        let mut d = String::new();
        for (x, y) in &pts {
            let _ = write!(d, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            buf,
            r##"<polygon points="{}" fill="#eef6fc" stroke="#1f77b4" stroke-dasharray="8 5" stroke-width="1.5"/>"##,
            d.trim_end()
        );
    }

    // Dock pose (dashed outline) and vessel outlines along the track.
    polyline(&mut buf, &outline(dock), "#2ca02c", 1.5, true);
    if !track.is_empty() {
        let stride = (track.len() / 12).max(1);
        for pose in track.iter().step_by(stride) {
            polyline(&mut buf, &outline(*pose), "#777777", 1.0, false);
        }
        if let Some(last) = track.last() {
            polyline(&mut buf, &outline(*last), "#000000", 1.4, false);
        }
        let pts: Vec<(f64, f64)> = track.iter().map(|&(x, y, _)| (sx(y), sy(x))).collect();
        polyline(&mut buf, &pts, "#1f77b4", 1.8, false);
    }
    buf.push_str("</svg>\n");
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(buf.as_bytes())
}

/// Minimal well-formedness check used by tests: tags balance and the
/// document is a single `<svg>` element.
pub fn svg_is_well_formed(text: &str) -> bool {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = text.trim();
    if !rest.starts_with("<svg") {
        return false;
    }
    while let Some(open) = rest.find('<') {
        rest = &rest[open..];
        let Some(close) = rest.find('>') else {
            return false;
        };
        let tag = &rest[1..close];
        rest = &rest[close + 1..];
        if let Some(name) = tag.strip_prefix('/') {
            match stack.pop() {
                Some(top) if top == name => {}
                _ => return false,
            }
        } else if !tag.ends_with('/') {
            let name: String = tag
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric())
                .collect();
            stack.push(name);
        }
    }
    stack.is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed_and_nonempty() {
        let dir = std::env::temp_dir().join("docking-plot-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("chart.svg");
        let series = vec![
            Series {
                label: "u [m/s]".into(),
                color: SERIES_COLORS[0].into(),
                points: (0..100).map(|k| (k as f64, (k as f64 * 0.1).sin())).collect(),
            },
            Series {
                label: "v [m/s]".into(),
                color: SERIES_COLORS[1].into(),
                points: (0..100).map(|k| (k as f64, (k as f64 * 0.07).cos())).collect(),
            },
        ];
        let hlines = vec![HLine {
            y: 1.5,
            label: "limit".into(),
        }];
        line_chart(&path, "velocities", "t [s]", "value", &series, &hlines).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.len() > 200);
        assert!(svg_is_well_formed(&text), "{text}");
    }

    #[test]
    fn harbor_view_renders_region_and_track() {
        let dir = std::env::temp_dir().join("docking-plot-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("harbor.svg");
        let region = ConvexPolygon::new(vec![
            Vector2::new(200.0, 200.0),
            Vector2::new(-200.0, 200.0),
            Vector2::new(-200.0, -200.0),
            Vector2::new(200.0, -200.0),
        ])
        .unwrap();
        let safety = crate::vessel::VesselParams::northern_clipper()
            .hull_polygon()
            .unwrap()
            .dilate(0.1)
            .unwrap();
        let track: Vec<(f64, f64, f64)> = (0..50)
            .map(|k| {
                let t = k as f64 / 49.0;
                (150.0 * (1.0 - t), 80.0 * (1.0 - t), 0.5 * t)
            })
            .collect();
        harbor_plot(&path, "test harbor", Some(&region), &safety, &track, (0.0, 0.0, 0.5))
            .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(svg_is_well_formed(&text));
        assert!(text.contains("polygon"));
    }
}
