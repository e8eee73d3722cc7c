use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::aggregate::read_aggregate;
use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

struct Series {
    label: String,
    points: Vec<(f64, f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders mean test MSE against cumulative examples, one line per aggregate
/// file with a shaded band of two standard deviations.
pub fn render_plot(inputs: &[PathBuf], log_y: bool) -> Result<String> {
    if inputs.is_empty() {
        return Err(Error::InvalidParameter("no aggregate files given".into()));
    }
    let series: Vec<Series> = inputs
        .iter()
        .map(|p| {
            Ok(Series {
                label: p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                points: read_aggregate(p)?,
            })
        })
        .collect::<Result<_>>()?;

    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x_lo, x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let ys = series
        .iter()
        .flat_map(|s| s.points.iter().flat_map(|p| [p.1 - p.2, p.1 + p.2]));
    let (mut y_lo, mut y_hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    // floor for log scale: a tenth of the smallest positive mean
    let floor = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .filter(|v| *v > 0.0)
        .fold(f64::INFINITY, f64::min)
        / 10.0;
    let floor = if floor.is_finite() { floor } else { 1e-12 };
    let ty = |v: f64| if log_y { v.max(floor).log10() } else { v };
    if log_y {
        y_lo = ty(y_lo);
        y_hi = ty(y_hi);
    } else {
        y_lo = y_lo.min(0.0);
    }
    let x_span = if x_hi > x_lo { x_hi - x_lo } else { 1.0 };
    let y_span = if y_hi > y_lo { y_hi - y_lo } else { 1.0 };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_lo) / x_span * pw;
    let py = |y: f64| TOP + ph - (ty(y) - y_lo) / y_span * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, y0, x1, y1) = (LEFT, TOP + ph, LEFT + pw, TOP);
    let _ = writeln!(svg, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x_lo + f * x_span;
        let xp = LEFT + f * pw;
        let _ = writeln!(
            svg,
            r#"<text x="{xp:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 18.0,
            format_tick(xv)
        );
        let yv = y_lo + f * y_span;
        let yp = TOP + ph - f * ph;
        let label = if log_y { format_tick(10f64.powf(yv)) } else { format_tick(yv) };
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
            x0 - 6.0,
            yp + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">number of observed examples</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">test MSE{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        if log_y { " (log scale)" } else { "" }
    );

    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut band = String::new();
        for p in &s.points {
            let _ = write!(band, "{:.2},{:.2} ", px(p.0), py(p.1 + p.2));
        }
        for p in s.points.iter().rev() {
            let _ = write!(band, "{:.2},{:.2} ", px(p.0), py(p.1 - p.2));
        }
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.trim_end()
        );
        let line: Vec<String> = s
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="4" fill="{color}"/>"#,
            ly - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            ly + 2.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

/// Writes the plot to `out`. Nothing is written on error.
pub fn emit_plot(inputs: &[PathBuf], out: &Path, log_y: bool) -> Result<()> {
    let svg = render_plot(inputs, log_y)?;
    std::fs::write(out, svg)?;
    Ok(())
}
