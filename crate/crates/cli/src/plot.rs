//! Minimal SVG charts of success rates (fractions in [0, 1], drawn as %).

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn y_of(rate: f64) -> f64 {
    TOP + (1.0 - rate.clamp(0.0, 1.0)) * (H - TOP - BOTTOM)
}

fn frame(svg: &mut String, title: &str, x_label: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
    for pct in (0..=100).step_by(20) {
        let y = y_of(pct as f64 / 100.0);
        let _ = writeln!(svg, r##"<line x1="{LEFT}" x2="{}" y1="{y}" y2="{y}" stroke="#ddd"/>"##, W - RIGHT);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{pct}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">success rate (%)</text>"#,
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
}

fn error_bar(svg: &mut String, x: f64, mean: f64, std: f64) {
    let (y0, y1) = (y_of(mean - std), y_of(mean + std));
    let _ = writeln!(svg, r#"<line x1="{x}" x2="{x}" y1="{y0}" y2="{y1}" stroke="black"/>"#);
    for y in [y0, y1] {
        let _ = writeln!(svg, r#"<line x1="{}" x2="{}" y1="{y}" y2="{y}" stroke="black"/>"#, x - 5.0, x + 5.0);
    }
}

/// One bar per `(label, mean, std)`.
pub fn bar_chart(title: &str, bars: &[(String, f64, f64)]) -> String {
    let mut svg = String::new();
    frame(&mut svg, title, "");
    let slot = (W - LEFT - RIGHT) / bars.len().max(1) as f64;
    for (i, (label, mean, std)) in bars.iter().enumerate() {
        let x = LEFT + slot * (i as f64 + 0.5);
        let y = y_of(*mean);
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{y}" width="{}" height="{}" fill="{}"/>"#,
            x - slot * 0.3,
            slot * 0.6,
            y_of(0.0) - y,
            COLORS[i % COLORS.len()]
        );
        error_bar(&mut svg, x, *mean, *std);
        let _ = writeln!(svg, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, H - BOTTOM + 16.0, escape(label));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Lines over a shared numeric x axis; every series is `(name, points)`
/// with points `(x, mean, std)` sorted by x.
pub fn line_chart(title: &str, x_label: &str, series: &[(String, Vec<(f64, f64, f64)>)]) -> String {
    let mut svg = String::new();
    frame(&mut svg, title, x_label);
    let xs: Vec<f64> = series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)).collect();
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let pad = 30.0;
    let x_of = |x: f64| LEFT + pad + (x - lo) / span * (W - LEFT - RIGHT - 2.0 * pad);
    let mut ticks: Vec<f64> = xs.clone();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for t in &ticks {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{t}</text>"#, x_of(*t), H - BOTTOM + 16.0);
    }
    for (i, (name, points)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = points.iter().map(|(x, m, _)| format!("{},{}", x_of(*x), y_of(*m))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" "));
        for (x, m, s) in points {
            let _ = writeln!(svg, r#"<circle cx="{}" cy="{}" r="4" fill="{color}"/>"#, x_of(*x), y_of(*m));
            error_bar(&mut svg, x_of(*x), *m, *s);
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            LEFT + 10.0,
            TOP + 14.0 + 16.0 * i as f64,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let bars = bar_chart("a <b>", &[("x".into(), 0.5, 0.1), ("y".into(), 1.0, 0.0)]);
        assert!(bars.starts_with("<svg") && bars.trim_end().ends_with("</svg>"));
        assert!(bars.contains("a &lt;b&gt;"));
        let lines = line_chart("t", "demos", &[("s".into(), vec![(200.0, 0.2, 0.0), (800.0, 0.6, 0.05)])]);
        assert_eq!(lines.matches("<circle").count(), 2);
    }
}
