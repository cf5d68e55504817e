//! Minimal self-contained SVG charts. Each chart embeds its data as CSV in
//! a comment so it can be redrawn without rerunning anything.

use super::emit::fmt_num;
use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit<'a>(points: impl Iterator<Item = &'a (f64, f64)>) -> Self {
        let mut f = Frame {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for &(x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            f.x0 = f.x0.min(x);
            f.x1 = f.x1.max(x);
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        if !f.x0.is_finite() {
            return Frame {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            };
        }
        if f.x1 == f.x0 {
            f.x1 = f.x0 + 1.0;
        }
        if f.y1 == f.y0 {
            f.y0 -= 0.5;
            f.y1 += 0.5;
        }
        f
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn header(out: &mut String, title: &str, data: &str, frame: &Frame, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, "<!-- data\n{data}-->");
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-size="15" text-anchor="middle" font-family="sans-serif">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let small = r#"font-size="11" font-family="sans-serif""#;
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{}" {small}>{}</text><text x="{}" y="{}" {small} text-anchor="end">{}</text>"#,
        H - PAD + 15.0,
        fmt_short(frame.x0),
        W - PAD,
        H - PAD + 15.0,
        fmt_short(frame.x1)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" {small} text-anchor="end">{}</text><text x="{}" y="{}" {small} text-anchor="end">{}</text>"#,
        PAD - 4.0,
        H - PAD,
        fmt_short(frame.y0),
        PAD - 4.0,
        PAD + 10.0,
        fmt_short(frame.y1)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" {small} text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" {small} text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
}

fn fmt_short(x: f64) -> String {
    format!("{x:.4}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = PAD + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}" font-size="11" font-family="sans-serif">{}</text>"#,
            W - PAD - 130.0,
            y - 9.0,
            COLORS[i % COLORS.len()],
            W - PAD - 115.0,
            y,
            escape(name)
        );
    }
}

fn data_block(series: &[Series<'_>]) -> String {
    let mut s = String::from("series,x,y\n");
    for ser in series {
        for (x, y) in &ser.points {
            let _ = writeln!(s, "{},{},{}", ser.name, fmt_num(*x), fmt_num(*y));
        }
    }
    s
}

/// Polyline chart, one line per series.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series<'_>]) -> String {
    let frame = Frame::fit(series.iter().flat_map(|s| s.points.iter()));
    let mut out = String::new();
    header(&mut out, title, &data_block(series), &frame, xlabel, ylabel);
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
            COLORS[i % COLORS.len()],
            pts.join(" ")
        );
    }
    if series.len() > 1 {
        legend(&mut out, &series.iter().map(|s| s.name).collect::<Vec<_>>());
    }
    out.push_str("</svg>\n");
    out
}

/// Scatter chart, one colour per series. With `diagonal` the line `y = x`
/// is drawn as a reference.
pub fn scatter_chart(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[Series<'_>],
    diagonal: bool,
) -> String {
    let frame = Frame::fit(series.iter().flat_map(|s| s.points.iter()));
    let mut out = String::new();
    header(&mut out, title, &data_block(series), &frame, xlabel, ylabel);
    if diagonal {
        let lo = frame.x0.max(frame.y0);
        let hi = frame.x1.min(frame.y1);
        if lo < hi {
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="4 3"/>"##,
                frame.px(lo),
                frame.py(lo),
                frame.px(hi),
                frame.py(hi)
            );
        }
    }
    for (i, s) in series.iter().enumerate() {
        for &(x, y) in s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
        {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}" fill-opacity="0.7"/>"#,
                frame.px(x),
                frame.py(y),
                COLORS[i % COLORS.len()]
            );
        }
    }
    if series.len() > 1 {
        legend(&mut out, &series.iter().map(|s| s.name).collect::<Vec<_>>());
    }
    out.push_str("</svg>\n");
    out
}

/// Histogram with `bins` equal-width bins.
pub fn histogram(title: &str, xlabel: &str, values: &[f64], bins: usize) -> String {
    let bins = bins.max(1);
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo < hi {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in &finite {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let points: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (lo + (i as f64 + 0.5) * width, c as f64))
        .collect();
    let mut frame = Frame::fit(points.iter());
    frame.x0 = lo;
    frame.x1 = hi;
    frame.y0 = 0.0;
    frame.y1 = frame.y1.max(1.0);
    let series = [Series {
        name: "count",
        points: points.clone(),
    }];
    let mut out = String::new();
    header(
        &mut out,
        title,
        &data_block(&series),
        &frame,
        xlabel,
        "count",
    );
    for &(x, c) in &points {
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            frame.px(x - width / 2.0),
            frame.py(c),
            frame.px(x + width / 2.0) - frame.px(x - width / 2.0),
            frame.py(0.0) - frame.py(c),
            COLORS[0]
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Horizontal groups of vertical bars, one group per label.
pub fn bar_chart(title: &str, labels: &[String], groups: &[(&str, Vec<f64>)]) -> String {
    let mut points = Vec::new();
    for (_, vals) in groups {
        for (i, v) in vals.iter().enumerate() {
            points.push((i as f64, *v));
        }
    }
    let mut frame = Frame::fit(points.iter());
    frame.x0 = -0.5;
    frame.x1 = labels.len() as f64 - 0.5;
    frame.y0 = frame.y0.min(0.0);
    frame.y1 = frame.y1.max(0.0);
    if frame.y0 == frame.y1 {
        frame.y1 = 1.0;
    }
    let series: Vec<Series<'_>> = groups
        .iter()
        .map(|(name, vals)| Series {
            name,
            points: vals
                .iter()
                .enumerate()
                .map(|(i, v)| (i as f64, *v))
                .collect(),
        })
        .collect();
    let mut out = String::new();
    header(&mut out, title, &data_block(&series), &frame, "", "");
    let slot = (W - 2.0 * PAD) / labels.len().max(1) as f64;
    let bar = slot * 0.8 / groups.len().max(1) as f64;
    for (g, (_, vals)) in groups.iter().enumerate() {
        for (i, &v) in vals.iter().enumerate() {
            let x = frame.px(i as f64) - slot * 0.4 + g as f64 * bar;
            let (top, bottom) = (frame.py(v.max(0.0)), frame.py(v.min(0.0)));
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{top:.2}" width="{bar:.2}" height="{:.2}" fill="{}"/>"#,
                bottom - top,
                COLORS[g % COLORS.len()]
            );
        }
    }
    for (i, label) in labels.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" font-size="10" font-family="sans-serif" text-anchor="middle">{}</text>"#,
            frame.px(i as f64),
            H - PAD + 28.0,
            escape(label)
        );
    }
    legend(
        &mut out,
        &groups.iter().map(|(n, _)| *n).collect::<Vec<_>>(),
    );
    out.push_str("</svg>\n");
    out
}
