//! Minimal SVG line/dot charts.

use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Style {
    Line { color: &'static str, width: f64 },
    Dashed { color: &'static str, width: f64 },
    Dots { color: &'static str, radius: f64 },
}

impl Style {
    fn color(&self) -> &'static str {
        match *self {
            Style::Line { color, .. } | Style::Dashed { color, .. } | Style::Dots { color, .. } => {
                color
            }
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Style::Dots { .. } => "dots",
            _ => "line",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub style: Style,
    /// Legend text; `None` keeps the series out of the legend (member
    /// clouds share one entry).
    pub legend: Option<String>,
}

/// A chart whose series all share one x-domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub output: PathBuf,
}

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 210.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

/// Round tick step covering `span` with about `target` intervals.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    format!("{v:.decimals$}")
}

impl PlotSpec {
    pub fn render(&self) -> String {
        let (x0, x1) = extent(self.series.iter().flat_map(|s| s.x.iter().copied()));
        let (y0, y1) = extent(self.series.iter().flat_map(|s| s.y.iter().copied()));
        let pad = 0.05 * (y1 - y0);
        let (y0, y1) = (
            (y0 - pad).max(if y0 >= 0.0 { 0.0 } else { f64::NEG_INFINITY }),
            y1 + pad,
        );
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );

        // Axes, ticks and grid.
        let _ = writeln!(out, r##"<g class="axes" stroke="#333" fill="none">"##);
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/>"#
        );
        let xs = tick_step(x1 - x0, 8.0);
        let mut t = (x0 / xs).ceil() * xs;
        while t <= x1 + 1e-9 * xs {
            let _ = writeln!(
                out,
                r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}"/>"#,
                sx(t),
                TOP + ph,
                TOP + ph + 5.0
            );
            t += xs;
        }
        let ys = tick_step(y1 - y0, 6.0);
        let mut t = (y0 / ys).ceil() * ys;
        while t <= y1 + 1e-9 * ys {
            let _ = writeln!(
                out,
                r#"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}"/>"#,
                LEFT - 5.0,
                sy(t),
                LEFT
            );
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#ddd"/>"##,
                sy(t),
                LEFT + pw
            );
            t += ys;
        }
        let _ = writeln!(out, "</g>");

        let _ = writeln!(out, r##"<g class="tick-labels" fill="#333">"##);
        let mut t = (x0 / xs).ceil() * xs;
        while t <= x1 + 1e-9 * xs {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                sx(t),
                TOP + ph + 18.0,
                fmt_tick(t, xs)
            );
            t += xs;
        }
        let mut t = (y0 / ys).ceil() * ys;
        while t <= y1 + 1e-9 * ys {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 8.0,
                sy(t) + 4.0,
                fmt_tick(t, ys)
            );
            t += ys;
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        let _ = writeln!(out, "</g>");

        // Dots first so lines stay on top.
        let mut ordered: Vec<&Series> = self
            .series
            .iter()
            .filter(|s| s.style.kind() == "dots")
            .collect();
        ordered.extend(self.series.iter().filter(|s| s.style.kind() != "dots"));
        for s in ordered {
            let label = escape(&s.label);
            match s.style {
                Style::Dots { color, radius } => {
                    let _ = writeln!(
                        out,
                        r#"<g class="series dots" data-label="{label}" fill="{color}" fill-opacity="0.7">"#
                    );
                    for (&x, &y) in s.x.iter().zip(&s.y) {
                        if x.is_finite() && y.is_finite() {
                            let _ = writeln!(
                                out,
                                r#"<circle cx="{:.2}" cy="{:.2}" r="{radius}"/>"#,
                                sx(x),
                                sy(y)
                            );
                        }
                    }
                    let _ = writeln!(out, "</g>");
                }
                Style::Line { color, width } | Style::Dashed { color, width } => {
                    let dash = if matches!(s.style, Style::Dashed { .. }) {
                        r#" stroke-dasharray="6 4""#
                    } else {
                        ""
                    };
                    let points: Vec<String> =
                        s.x.iter()
                            .zip(&s.y)
                            .filter(|(x, y)| x.is_finite() && y.is_finite())
                            .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                            .collect();
                    let _ = writeln!(
                        out,
                        r#"<g class="series line" data-label="{label}"><polyline fill="none" stroke="{color}" stroke-width="{width}"{dash} points="{}"/></g>"#,
                        points.join(" ")
                    );
                }
            }
        }

        // Legend.
        let _ = writeln!(out, r#"<g class="legend">"#);
        let lx = LEFT + pw + 16.0;
        let entries = self
            .series
            .iter()
            .filter_map(|s| s.legend.as_ref().map(|l| (s, l)));
        for (i, (s, text)) in entries.enumerate() {
            let y = TOP + 10.0 + 20.0 * i as f64;
            let color = s.style.color();
            match s.style {
                Style::Dots { radius, .. } => {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.1}" cy="{y:.1}" r="{}" fill="{color}"/>"#,
                        lx + 12.0,
                        radius + 1.0
                    );
                }
                Style::Line { width, .. } => {
                    let _ = writeln!(
                        out,
                        r#"<line x1="{lx:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="{width}"/>"#,
                        lx + 24.0
                    );
                }
                Style::Dashed { width, .. } => {
                    let _ = writeln!(
                        out,
                        r#"<line x1="{lx:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="{width}" stroke-dasharray="6 4"/>"#,
                        lx + 24.0
                    );
                }
            }
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
                lx + 30.0,
                y + 4.0,
                escape(text)
            );
        }
        let _ = writeln!(out, "</g>");
        out.push_str("</svg>\n");
        out
    }

    pub fn write(&self) -> std::io::Result<()> {
        std::fs::write(&self.output, self.render())
    }
}
