//! Scatter plot of a Pareto front: `f2` on x, `f1` on y.
//!
//! The canvas is 800×600 with the plot area spanning x ∈ [80, 760] and
//! y ∈ [40, 540]. The x range is `[0, max(1, max f2)]`, so infeasible
//! points stay visible; y always covers `[0, 1]`.

use std::fmt::Write;

use cellspace_core::ParetoArchive;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 760.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 540.0;

/// Maps objective space to the plot area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotFrame {
    pub x_max: f64,
}

impl PlotFrame {
    pub fn for_archive(archive: &ParetoArchive) -> Self {
        let x_max = archive
            .entries()
            .iter()
            .map(|e| e.objectives.f2)
            .filter(|f| f.is_finite())
            .fold(1.0, f64::max);
        PlotFrame { x_max }
    }

    pub fn x(&self, f2: f64) -> f64 {
        LEFT + f2 / self.x_max * (RIGHT - LEFT)
    }

    pub fn y(&self, f1: f64) -> f64 {
        BOTTOM - f1 * (BOTTOM - TOP)
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

pub fn render_pareto_svg(archive: &ParetoArchive) -> String {
    let frame = PlotFrame::for_archive(archive);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<g stroke="black" stroke-width="1"><line x1="{LEFT}" y1="{BOTTOM}" x2="{RIGHT}" y2="{BOTTOM}"/><line x1="{LEFT}" y1="{BOTTOM}" x2="{LEFT}" y2="{TOP}"/></g>"#
    );

    let _ = writeln!(
        s,
        r#"<g font-family="sans-serif" font-size="12" fill="black">"#
    );
    for i in 0..=4 {
        let t = f64::from(i) / 4.0;
        let x = frame.x(t * frame.x_max);
        let y = frame.y(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{BOTTOM}" x2="{x}" y2="{y2}" stroke="black"/><text x="{x}" y="{ty}" text-anchor="middle">{label}</text>"#,
            x = num(x),
            y2 = num(BOTTOM + 5.0),
            ty = num(BOTTOM + 20.0),
            label = num(t * frame.x_max)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{x1}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/><text x="{tx}" y="{ty}" text-anchor="end">{label}</text>"#,
            x1 = num(LEFT - 5.0),
            y = num(y),
            tx = num(LEFT - 8.0),
            ty = num(y + 4.0),
            label = num(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">params / TotalParam</text>"#,
        num((LEFT + RIGHT) / 2.0),
        num(HEIGHT - 20.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{y}" text-anchor="middle" transform="rotate(-90 20 {y})">1 − accuracy</text>"#,
        y = num((TOP + BOTTOM) / 2.0)
    );
    if frame.x_max > 1.0 {
        let x = num(frame.x(1.0));
        let _ = writeln!(
            s,
            r##"<line x1="{x}" y1="{BOTTOM}" x2="{x}" y2="{TOP}" stroke="#999999" stroke-dasharray="4 4"/>"##
        );
    }
    s.push_str("</g>\n");

    let _ = writeln!(s, r#"<g id="points">"#);
    for e in archive.entries() {
        let o = e.objectives;
        let fill = if o.is_feasible() {
            "#1f77b4"
        } else {
            "#d62728"
        };
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{}" r="4" fill="{fill}"/>"#,
            num(frame.x(o.f2)),
            num(frame.y(o.f1.clamp(0.0, 1.0)))
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}
