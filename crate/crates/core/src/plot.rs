//! Minimal SVG plots written as plain text.

use std::fmt::Write as _;

use crate::straightness::StraightnessSeries;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Axes {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in points {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |a: f64, b: f64| {
            let p = if b > a { 0.05 * (b - a) } else { 0.5f64.max(a.abs() * 0.05) };
            (a - p, b + p)
        };
        Axes {
            x: pad(x0, x1),
            y: pad(y0, y1),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }

    fn frame(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
        let _ = writeln!(
            out,
            r#"<polyline points="{l},{t} {l},{b} {r},{b}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let (xp, yp) = (self.px(xv), self.py(yv));
            let _ = writeln!(out, r#"<line x1="{xp:.1}" y1="{b}" x2="{xp:.1}" y2="{:.1}" stroke="black"/>"#, b + 4.0);
            let _ = writeln!(
                out,
                r#"<text x="{xp:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                b + 18.0,
                tick(xv)
            );
            let _ = writeln!(out, r#"<line x1="{:.1}" y1="{yp:.1}" x2="{l}" y2="{yp:.1}" stroke="black"/>"#, l - 4.0);
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                l - 6.0,
                yp + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            escape(title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 12.0,
            escape(xlabel)
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(ylabel)
        );
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn legend(out: &mut String, i: usize, label: &str) {
    let y = MARGIN + 4.0 + 16.0 * i as f64;
    let x = W - MARGIN - 150.0;
    let c = COLORS[i % COLORS.len()];
    let _ = writeln!(out, r#"<rect x="{x}" y="{:.1}" width="10" height="10" fill="{c}"/>"#, y - 9.0);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, x + 14.0, escape(label));
}

/// Straightness (radians) per interior frame, one line per series.
pub fn straightness_svg(series: &[&StraightnessSeries], title: &str) -> String {
    let axes = Axes::fit(
        series
            .iter()
            .flat_map(|s| s.frame_index.iter().zip(&s.straightness).map(|(&x, &y)| (x as f64, y))),
    );
    let mut out = String::new();
    axes.frame(&mut out, title, "frame", "straightness (rad)");
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .frame_index
            .iter()
            .zip(&s.straightness)
            .map(|(&x, &y)| format!("{:.2},{:.2}", axes.px(x as f64), axes.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            pts.join(" "),
            COLORS[i % COLORS.len()]
        );
        legend(&mut out, i, s.domain.as_str());
    }
    out.push_str("</svg>\n");
    out
}

/// Scatter of D_ST (x) against P_ST (y), one labelled point per method.
pub fn tradeoff_svg(points: &[(String, f64, f64)], title: &str) -> String {
    let axes = Axes::fit(points.iter().map(|(_, x, y)| (*x, *y)));
    let mut out = String::new();
    axes.frame(&mut out, title, "D_ST (lower is better)", "P_ST (lower is better)");
    for (i, (name, x, y)) in points.iter().enumerate() {
        let (px, py) = (axes.px(*x), axes.py(*y));
        let c = COLORS[i % COLORS.len()];
        let _ = writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="4" fill="{c}"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            px + 6.0,
            py - 6.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_is_well_formed() {
        let svg = tradeoff_svg(
            &[("EDVR".into(), 75.55, 0.6737), ("A<B".into(), 54.05, 0.4220)],
            "trade-off",
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("A&lt;B"));
    }

    #[test]
    fn empty_plot_still_renders() {
        let svg = tradeoff_svg(&[], "empty");
        assert!(svg.contains("</svg>"));
    }
}
