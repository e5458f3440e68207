//! Minimal SVG 1.1 line plots with fixed 6-significant-digit formatting.

use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub label: String,
    pub color: String,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

impl Polyline {
    pub fn new(
        label: impl Into<String>,
        color: impl Into<String>,
        points: Vec<(f64, f64)>,
    ) -> Self {
        Self {
            label: label.into(),
            color: color.into(),
            dashed: false,
            points,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

/// Circle in data coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Disc {
    pub center: (f64, f64),
    pub radius: f64,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgPlot {
    pub width: u32,
    pub height: u32,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub polylines: Vec<Polyline>,
    pub discs: Vec<Disc>,
    /// Same scale on both axes.
    pub equal_aspect: bool,
}

impl SvgPlot {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
    ) -> Self {
        Self {
            width: 640,
            height: 480,
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            polylines: Vec::new(),
            discs: Vec::new(),
            equal_aspect: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SvgError {
    #[error("plot `{0}` has non-finite coordinates")]
    NonFinite(String),
}

/// `v` rounded to 6 significant digits, without trailing zeros.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (5 - mag).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const TICKS: usize = 5;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * self.w
    }
    fn py(&self, y: f64) -> f64 {
        MARGIN_T + (self.y1 - y) / (self.y1 - self.y0) * self.h
    }
}

fn bounds(plot: &SvgPlot) -> (f64, f64, f64, f64) {
    let mut b = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    let mut grow = |x: f64, y: f64| {
        b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
    };
    for p in &plot.polylines {
        for &(x, y) in &p.points {
            grow(x, y);
        }
    }
    for d in &plot.discs {
        grow(d.center.0 - d.radius, d.center.1 - d.radius);
        grow(d.center.0 + d.radius, d.center.1 + d.radius);
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| {
        if hi - lo > 0.0 {
            let m = 0.05 * (hi - lo);
            (lo - m, hi + m)
        } else {
            let m = lo.abs().max(1.0) * 0.5;
            (lo - m, hi + m)
        }
    };
    let (x0, x1) = pad(b.0, b.1);
    let (y0, y1) = pad(b.2, b.3);
    (x0, x1, y0, y1)
}

/// Renders the document.
pub fn render(plot: &SvgPlot) -> Result<String, SvgError> {
    let finite = plot
        .polylines
        .iter()
        .all(|p| p.points.iter().all(|(x, y)| x.is_finite() && y.is_finite()))
        && plot
            .discs
            .iter()
            .all(|d| d.center.0.is_finite() && d.center.1.is_finite() && d.radius.is_finite());
    if !finite {
        return Err(SvgError::NonFinite(plot.title.clone()));
    }
    let (w, h) = (plot.width as f64, plot.height as f64);
    let (mut x0, mut x1, mut y0, mut y1) = bounds(plot);
    let (pw, ph) = (w - MARGIN_L - MARGIN_R, h - MARGIN_T - MARGIN_B);
    if plot.equal_aspect {
        let scale = ((x1 - x0) / pw).max((y1 - y0) / ph);
        let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
        (x0, x1) = (cx - scale * pw / 2.0, cx + scale * pw / 2.0);
        (y0, y1) = (cy - scale * ph / 2.0, cy + scale * ph / 2.0);
    }
    let f = Frame {
        x0,
        x1,
        y0,
        y1,
        w: pw,
        h: ph,
    };
    let n = fmt_num;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#
    );
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        plot.width, plot.height, plot.width, plot.height
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
        plot.width, plot.height
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        n(MARGIN_L + pw / 2.0),
        escape(&plot.title)
    );
    // axes box
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black" stroke-width="1"/>"#,
        n(MARGIN_L),
        n(MARGIN_T),
        n(pw),
        n(ph)
    );
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let (px, py) = (f.px(xv), f.py(yv));
        let bottom = MARGIN_T + ph;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black" stroke-width="1"/>"#,
            n(px),
            n(bottom),
            n(bottom + 5.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            n(px),
            n(bottom + 18.0),
            n(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black" stroke-width="1"/>"#,
            n(MARGIN_L - 5.0),
            n(py),
            n(MARGIN_L)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            n(MARGIN_L - 8.0),
            n(py + 4.0),
            n(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        n(MARGIN_L + pw / 2.0),
        n(h - 10.0),
        escape(&plot.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        n(MARGIN_T + ph / 2.0),
        escape(&plot.y_label)
    );
    for d in &plot.discs {
        let r = d.radius / (x1 - x0) * pw;
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{}" fill-opacity="0.3" stroke="{}" stroke-width="1"/>"#,
            n(f.px(d.center.0)),
            n(f.py(d.center.1)),
            n(r),
            escape(&d.color),
            escape(&d.color)
        );
    }
    for p in &plot.polylines {
        let pts: Vec<String> = p
            .points
            .iter()
            .map(|&(x, y)| format!("{},{}", n(f.px(x)), n(f.py(y))))
            .collect();
        let dash = if p.dashed {
            r#" stroke-dasharray="6,4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{}/>"#,
            pts.join(" "),
            escape(&p.color),
            dash
        );
    }
    for (i, p) in plot
        .polylines
        .iter()
        .filter(|p| !p.label.is_empty())
        .enumerate()
    {
        let y = MARGIN_T + 12.0 + 18.0 * i as f64;
        let x = MARGIN_L + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{2}" x2="{1}" y2="{2}" stroke="{3}" stroke-width="2"/>"#,
            n(x),
            n(x + 20.0),
            n(y),
            escape(&p.color)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            n(x + 26.0),
            n(y + 4.0),
            escape(&p.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Renders `plot` and writes it atomically to `path`.
pub fn emit_svg(plot: &SvgPlot, path: &Path) -> Result<(), crate::CliError> {
    let doc = render(plot).map_err(crate::CliError::Plot)?;
    crate::output::write_atomic(path, doc.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(123.456789), "123.457");
        assert_eq!(fmt_num(-0.00123456789), "-0.00123457");
        assert_eq!(fmt_num(70.0), "70");
        assert_eq!(fmt_num(1.5e-7), "0.00000015");
    }

    #[test]
    fn empty_plot_has_axes_only() {
        let doc = render(&SvgPlot::new("t", "x", "y")).unwrap();
        assert!(doc.starts_with("<?xml"));
        assert!(doc.contains(r#"version="1.1""#));
        assert!(!doc.contains("<polyline"));
        assert!(doc.contains("<line"));
        assert!(doc.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn one_polyline_element() {
        let mut p = SvgPlot::new("t", "x", "y");
        p.polylines
            .push(Polyline::new("a", "blue", vec![(0.0, 0.0), (1.0, 2.0)]));
        let doc = render(&p).unwrap();
        assert_eq!(doc.matches("<polyline").count(), 1);
        assert_eq!(render(&p).unwrap(), doc);
    }

    #[test]
    fn escapes_and_rejects_nan() {
        let mut p = SvgPlot::new("a < b & c", "x", "y");
        p.polylines
            .push(Polyline::new("", "red", vec![(0.0, 1.0), (1.0, 1.0)]));
        assert!(render(&p).unwrap().contains("a &lt; b &amp; c"));
        p.polylines[0].points.push((f64::NAN, 0.0));
        assert!(render(&p).is_err());
    }
}
