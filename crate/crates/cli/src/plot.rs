//! Log-scale SVG line charts of orbit traces.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub norm_plus: f64,
    pub norm_minus: f64,
}

/// Reads the `step`, `norm_plus` and `norm_minus` columns of an orbit CSV.
pub fn parse_trace(csv_text: &str) -> Result<Vec<TraceRow>> {
    csv::Reader::from_reader(csv_text.as_bytes())
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.with_context(|| format!("trace row {}", i + 1)))
        .collect()
}

/// Renders `norm_plus` and `norm_minus` against `step` on a log axis.
/// Traces without a positive finite value are drawn as a flat baseline and
/// flagged `degenerate`.
pub fn emit_plot(csv_text: &str) -> Result<String> {
    let rows = parse_trace(csv_text)?;
    if rows.len() < 2 {
        bail!("a trace plot needs at least 2 rows, got {}", rows.len());
    }
    let positive = rows
        .iter()
        .flat_map(|r| [r.norm_plus, r.norm_minus])
        .filter(|v| v.is_finite() && *v > 0.0);
    let (lo, hi) = positive.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let degenerate = hi == 0.0;
    let (d_lo, d_hi) = if degenerate {
        (0, 1)
    } else {
        let (a, b) = (lo.log10().floor() as i32, hi.log10().ceil() as i32);
        if a == b { (a - 1, b + 1) } else { (a, b) }
    };

    let (s0, s1) = (rows[0].step as f64, rows[rows.len() - 1].step as f64);
    let span = if s1 > s0 { s1 - s0 } else { 1.0 };
    let px = |s: usize| LEFT + (s as f64 - s0) / span * (WIDTH - LEFT - RIGHT);
    let py = |v: f64| {
        let l = if v.is_finite() && v > 0.0 { v.log10().clamp(d_lo as f64, d_hi as f64) } else { d_lo as f64 };
        TOP + (d_hi as f64 - l) / (d_hi - d_lo) as f64 * (HEIGHT - TOP - BOTTOM)
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-degenerate="{degenerate}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(svg, r#"<path d="M{x0:.2} {y0:.2} V{y1:.2} H{x1:.2}" stroke="black" fill="none"/>"#);
    for d in d_lo..=d_hi {
        let y = py(10f64.powi(d));
        let _ = writeln!(svg, r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#ddd"/>"##);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">1e{d}</text>"#, x0 - 6.0, y + 4.0);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">step</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 8.0
    );
    for (class, colour, pick) in [
        ("norm_plus", "#c0392b", (|r: &TraceRow| r.norm_plus) as fn(&TraceRow) -> f64),
        ("norm_minus", "#2471a3", |r: &TraceRow| r.norm_minus),
    ] {
        let points: Vec<String> = rows.iter().map(|r| format!("{:.2},{:.2}", px(r.step), py(pick(r)))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="{class}" points="{}" stroke="{colour}" stroke-width="1.5" fill="none"/>"#,
            points.join(" ")
        );
    }
    let _ = writeln!(svg, r##"<text x="{:.2}" y="16" font-size="12" fill="#c0392b">norm_plus</text>"##, x0 + 8.0);
    let _ = writeln!(svg, r##"<text x="{:.2}" y="16" font-size="12" fill="#2471a3">norm_minus</text>"##, x0 + 88.0);
    if degenerate {
        let _ = writeln!(
            svg,
            r#"<text class="flag" x="{:.2}" y="16" font-size="12" text-anchor="end">degenerate</text>"#,
            x1
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(values: impl Iterator<Item = (f64, f64)>) -> String {
        let mut s = String::from("step,x,norm_plus,norm_minus,ratio,mccarthy_lhs,mccarthy_rhs,holds\n");
        for (i, (p, m)) in values.enumerate() {
            s.push_str(&format!("{i},0.5,{p:e},{m:e},,,,\n"));
        }
        s
    }

    #[test]
    fn ten_step_trace_has_two_polylines() {
        let svg = emit_plot(&trace((0..10).map(|i| (1e-6 * 2f64.powi(i), 1e-6 * 0.5f64.powi(i))))).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(r#"data-degenerate="false""#));
        assert!(!svg.contains("degenerate</text>"));
    }

    #[test]
    fn zero_trace_is_flat_and_flagged() {
        let svg = emit_plot(&trace((0..5).map(|_| (0.0, 0.0)))).unwrap();
        assert!(svg.contains(r#"data-degenerate="true""#));
        assert!(svg.contains("degenerate</text>"));
        let baseline = format!("{:.2}", HEIGHT - BOTTOM);
        for line in svg.lines().filter(|l| l.starts_with("<polyline")) {
            let pts = line.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
            assert!(pts.split(' ').all(|p| p.ends_with(&format!(",{baseline}"))), "{pts}");
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let t = trace((0..4).map(|i| (3.0f64.powi(i), 0.1)));
        assert_eq!(emit_plot(&t).unwrap(), emit_plot(&t).unwrap());
    }

    #[test]
    fn short_traces_are_rejected() {
        assert!(emit_plot(&trace(std::iter::once((1.0, 1.0)))).is_err());
        assert!(emit_plot(&trace(std::iter::empty())).is_err());
    }
}
