//! Minimal standalone SVG line plots. Output depends only on the input
//! numbers, so identical series give identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::store::write_file;
use crate::ExperimentError;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Drawn dashed, for reference curves.
    pub dashed: bool,
}

impl Series {
    pub fn new(label: &str, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.to_string(), points, dashed: false }
    }

    pub fn reference(label: &str, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.to_string(), points, dashed: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Self { log, lo: 0.0, hi: 1.0 };
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { log, lo, hi }
    }

    /// Position in `[0, 1]`.
    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            if b >= a {
                return (a..=b).map(|e| 10f64.powi(e)).collect();
            }
        }
        let lo = if self.log { 10f64.powf(self.lo) } else { self.lo };
        let hi = if self.log { 10f64.powf(self.hi) } else { self.hi };
        (0..=4).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect()
    }
}

/// Points that can be drawn on the given axes.
fn drawable(s: &Series, plot: &Plot) -> Vec<(f64, f64)> {
    s.points
        .iter()
        .copied()
        .filter(|(x, y)| x.is_finite() && y.is_finite() && (!plot.log_x || *x > 0.0) && (!plot.log_y || *y > 0.0))
        .collect()
}

pub fn render(plot: &Plot) -> String {
    let all: Vec<(f64, f64)> = plot.series.iter().flat_map(|s| drawable(s, plot)).collect();
    let ax = Axis::fit(all.iter().map(|p| p.0), plot.log_x);
    let ay = Axis::fit(all.iter().map(|p| p.1), plot.log_y);
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let px = |x: f64| LEFT + ax.unit(x) * pw;
    let py = |y: f64| TOP + (1.0 - ay.unit(y)) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(&plot.title));
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in ax.ticks() {
        let x = px(t);
        let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.3e}</text>"#, TOP + ph + 18.0);
    }
    for t in ay.ticks() {
        let y = py(t);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t:.2e}</text>"#, LEFT - 8.0, y + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 10.0, escape(&plot.x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    );
    for (i, s) in plot.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let pts: Vec<String> = drawable(s, plot).iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        if !pts.is_empty() {
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, pts.join(" "));
            if !s.dashed {
                for p in &pts {
                    let (x, y) = p.split_once(',').expect("pair");
                    let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
                }
            }
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(out, r#"<line x1="{lx}" y1="{ly}" x2="{:.1}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash}/>"#, lx + 20.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

pub fn emit_svg(path: &Path, plot: &Plot) -> Result<(), ExperimentError> {
    write_file(path, render(plot))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plot() -> Plot {
        Plot {
            title: "gap <vs> nu".into(),
            x_label: "nu".into(),
            y_label: "error".into(),
            log_x: true,
            log_y: true,
            series: vec![
                Series::new("gap", vec![(1e-1, 0.2), (1e-2, 0.09), (1e-3, 0.04), (1e-4, 0.0)]),
                Series::reference("nu^(1/6)", vec![(1e-1, 0.3), (1e-4, 0.1)]),
            ],
        }
    }

    #[test]
    fn rendering_is_stable_and_well_formed() {
        let a = render(&plot());
        assert_eq!(a, render(&plot()));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("&lt;vs&gt;"));
        assert!(a.contains("stroke-dasharray"));
        // the zero value cannot appear on a log axis
        assert_eq!(a.matches("<circle").count(), 3);
    }

    #[test]
    fn empty_plot_renders() {
        let p = Plot { series: vec![], ..plot() };
        assert!(render(&p).contains("</svg>"));
    }
}
