//! Minimal polyline plots of a [`Table`] against its `t` column.

use std::fmt::Write;

use crate::output::Table;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
/// Points per polyline; longer series are decimated.
const MAX_POINTS: usize = 2000;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(table: &Table, title: &str) -> String {
    let t = &table.columns[0].1;
    let series = &table.columns[1..];
    let finite = |v: &&f64| v.is_finite();
    let (t0, t1) = (t.first().copied().unwrap_or(0.0), t.last().copied().unwrap_or(1.0));
    let mut lo = series.iter().flat_map(|(_, v)| v.iter().filter(finite)).copied().fold(f64::INFINITY, f64::min);
    let mut hi = series.iter().flat_map(|(_, v)| v.iter().filter(finite)).copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo, hi) = (lo - 0.5, hi + 0.5);
    }
    let span_t = if t1 > t0 { t1 - t0 } else { 1.0 };
    let x = |v: f64| MARGIN + (v - t0) / span_t * (WIDTH - 2.0 * MARGIN);
    let y = |v: f64| HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for (value, px, py, anchor) in [
        (t0, x(t0), HEIGHT - MARGIN + 15.0, "middle"),
        (t1, x(t1), HEIGHT - MARGIN + 15.0, "middle"),
        (lo, MARGIN - 5.0, y(lo), "end"),
        (hi, MARGIN - 5.0, y(hi) + 4.0, "end"),
    ] {
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{py:.2}" font-family="sans-serif" font-size="10" text-anchor="{anchor}">{value:.4}</text>"#);
    }
    if lo < 0.0 && hi > 0.0 {
        let _ = writeln!(s, r##"<line x1="{MARGIN}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="#bbb"/>"##, y(0.0), WIDTH - MARGIN);
    }
    let stride = t.len().div_ceil(MAX_POINTS).max(1);
    for (k, (name, values)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut points = String::new();
        for j in (0..t.len()).step_by(stride).chain(std::iter::once(t.len().saturating_sub(1))) {
            if values[j].is_finite() {
                let _ = write!(points, "{:.2},{:.2} ", x(t[j]), y(values[j]));
            }
        }
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, points.trim_end());
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            WIDTH - MARGIN + 5.0,
            MARGIN + 15.0 * (k as f64 + 1.0),
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}
