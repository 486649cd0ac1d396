//! Report serialization: versioned JSON, CSV tables, and SVG curve plots.
//!
//! Everything written here is byte-deterministic for a fixed input: field
//! order comes from struct definitions, floats print in Rust's shortest
//! round-trip form, and SVG coordinates are formatted with fixed precision.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::gof::TestReport;

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_string<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// One row per partial-conjunction index: `m,pc`.
pub fn report_to_csv(report: &TestReport) -> String {
    let mut out = String::from("m,pc\n");
    for (i, pc) in report.pc_curve.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, pc);
    }
    out
}

pub fn write_report(report: &TestReport, dir: &Path, stem: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(report, &dir.join(format!("{stem}.json")))?;
    fs::write(dir.join(format!("{stem}.csv")), report_to_csv(report))?;
    let curve = CurvePlot {
        x_label: "m",
        y_label: "pc(m)",
        alpha: Some(report.alpha),
        series: vec![(report.stat.name().to_string(), report.pc_curve.clone())],
    };
    fs::write(dir.join(format!("{stem}.svg")), curve.to_svg())?;
    Ok(())
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// A simple multi-series line plot over x = 1..=len(values).
pub struct CurvePlot {
    pub x_label: &'static str,
    pub y_label: &'static str,
    /// Horizontal reference line (the significance level).
    pub alpha: Option<f64>,
    pub series: Vec<(String, Vec<f64>)>,
}

impl CurvePlot {
    pub fn to_svg(&self) -> String {
        const W: f64 = 720.0;
        const H: f64 = 480.0;
        const L: f64 = 72.0;
        const R: f64 = 24.0;
        const T: f64 = 24.0;
        const B: f64 = 56.0;
        let pw = W - L - R;
        let ph = H - T - B;
        let n = self
            .series
            .iter()
            .map(|(_, v)| v.len())
            .max()
            .unwrap_or(1)
            .max(1);
        let x_of = |i: usize| {
            if n == 1 {
                L + pw / 2.0
            } else {
                L + pw * (i as f64) / ((n - 1) as f64)
            }
        };
        let y_of = |v: f64| T + ph * (1.0 - v.clamp(0.0, 1.0));

        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
        );
        let _ = writeln!(
            s,
            "  <rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>"
        );
        // Axes.
        let _ = writeln!(
            s,
            "  <line x1=\"{L}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"1\"/>",
            T + ph,
            L + pw,
            T + ph
        );
        let _ = writeln!(
            s,
            "  <line x1=\"{L}\" y1=\"{T}\" x2=\"{L}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"1\"/>",
            T + ph
        );
        // y ticks.
        for i in 0..=4 {
            let v = i as f64 / 4.0;
            let y = y_of(v);
            let _ = writeln!(
                s,
                "  <line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{L}\" y2=\"{y:.2}\" stroke=\"black\" stroke-width=\"1\"/>",
                L - 5.0
            );
            let _ = writeln!(
                s,
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{v:.2}</text>",
                L - 8.0,
                y + 4.0
            );
        }
        // x ticks: 1, n/4, n/2, 3n/4, n.
        let mut xticks = vec![1, n.div_ceil(4), n.div_ceil(2), 3 * n / 4, n];
        xticks.dedup();
        for m in xticks {
            let x = x_of(m - 1);
            let _ = writeln!(
                s,
                "  <line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"1\"/>",
                T + ph,
                T + ph + 5.0
            );
            let _ = writeln!(
                s,
                "  <text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{m}</text>",
                T + ph + 20.0
            );
        }
        let _ = writeln!(
            s,
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
            L + pw / 2.0,
            H - 12.0,
            self.x_label
        );
        let _ = writeln!(
            s,
            "  <text x=\"18\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>",
            T + ph / 2.0,
            T + ph / 2.0,
            self.y_label
        );
        // Reference line.
        if let Some(alpha) = self.alpha {
            let y = y_of(alpha);
            let _ = writeln!(
                s,
                "  <line x1=\"{L}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#555555\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>",
                L + pw
            );
            let _ = writeln!(
                s,
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"#555555\">alpha={alpha}</text>",
                L + 6.0,
                y - 5.0
            );
        }
        // Series.
        for (si, (label, values)) in self.series.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            let pts: Vec<String> = values
                .iter()
                .enumerate()
                .map(|(i, &v)| format!("{:.2},{:.2}", x_of(i), y_of(v)))
                .collect();
            let _ = writeln!(
                s,
                "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                pts.join(" ")
            );
            let ly = T + 16.0 + 16.0 * si as f64;
            let _ = writeln!(
                s,
                "  <line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
                L + pw - 130.0,
                L + pw - 106.0
            );
            let _ = writeln!(
                s,
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">{label}</text>",
                L + pw - 100.0,
                ly + 4.0
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Minimal well-formedness check used by the emission tests: tags balance
/// and the document has a single svg root.
pub fn svg_is_well_formed(svg: &str) -> bool {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = svg;
    while let Some(open) = rest.find('<') {
        let Some(close) = rest[open..].find('>') else {
            return false;
        };
        let tag = &rest[open + 1..open + close];
        rest = &rest[open + close + 1..];
        if let Some(name) = tag.strip_prefix('/') {
            match stack.pop() {
                Some(top) if top == name => {}
                _ => return false,
            }
        } else if !tag.ends_with('/') && !tag.starts_with('?') && !tag.starts_with('!') {
            let name: String = tag
                .split_whitespace()
                .next()
                .unwrap_or("")
                .chars()
                .collect();
            stack.push(name);
        }
    }
    stack.is_empty()
}
