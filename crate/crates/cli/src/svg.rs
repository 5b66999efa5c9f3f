//! Minimal polyline SVG charts for the detrend command.
//!
//! Each series gets two 1200x400 charts, one per half of the sample,
//! overlaying the raw series (grey), the estimated trend (thick black)
//! and the fixed-weight trend (thin black).

use std::fmt::Write as _;

const WIDTH: f64 = 1200.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 20.0;

pub struct Line<'a> {
    pub values: &'a [f64],
    pub stroke: &'a str,
    pub width: f64,
}

/// Renders overlaid polylines over a shared value range.
pub fn chart(lines: &[Line<'_>]) -> String {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for line in lines {
        for &v in line.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let x_span = WIDTH - 2.0 * MARGIN;
    let y_span = HEIGHT - 2.0 * MARGIN;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
    );
    for line in lines {
        let n = line.values.len();
        if n < 2 {
            continue;
        }
        let mut points = String::new();
        for (i, &v) in line.values.iter().enumerate() {
            let x = MARGIN + x_span * i as f64 / (n - 1) as f64;
            let y = MARGIN + y_span * (1.0 - (v - lo) / (hi - lo));
            let _ = write!(points, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="{}" points="{}"/>"#,
            line.stroke,
            line.width,
            points.trim_end()
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// The two half-sample windows used for display.
pub fn windows(n: usize) -> [(usize, usize); 2] {
    let mid = n / 2;
    [(0, mid.max(2)), (mid.saturating_sub(1), n)]
}
