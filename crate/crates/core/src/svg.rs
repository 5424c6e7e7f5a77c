//! SVG rendering of planar networks. Chains of dimension 3 or more are
//! projected onto their first two coordinates.

use std::fmt::Write as _;

use crate::chains::PolyChain;

const PANEL: f64 = 240.0;
const MARGIN: f64 = 16.0;

/// Projection notice for chains that are not planar.
pub fn projection_warning(chain: &PolyChain) -> Option<String> {
    match chain.dim() {
        Some(d) if d > 2 => Some(format!("chain has dimension {d}; projected onto the first two coordinates")),
        _ => None,
    }
}

fn xy(c: &[f64]) -> (f64, f64) {
    (c.first().copied().unwrap_or(0.0), c.get(1).copied().unwrap_or(0.0))
}

/// Draws `chain` into the square `[x0, x0 + PANEL] x [y0, y0 + PANEL]`.
fn draw(out: &mut String, chain: &PolyChain, x0: f64, y0: f64, title: Option<&str>) {
    let pts: Vec<(f64, f64)> = chain.vertices().iter().map(|p| xy(p.coords())).collect();
    let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
    for &(x, y) in &pts {
        lo = (lo.0.min(x), lo.1.min(y));
        hi = (hi.0.max(x), hi.1.max(y));
    }
    let span = (hi.0 - lo.0).max(hi.1 - lo.1);
    let span = if span.is_finite() && span > 0.0 { span } else { 1.0 };
    let inner = PANEL - 2.0 * MARGIN;
    let map = |(x, y): (f64, f64)| (x0 + MARGIN + (x - lo.0) / span * inner, y0 + PANEL - MARGIN - (y - lo.1) / span * inner);
    let wmax = chain.edges().iter().fold(0.0f64, |a, e| a.max(e.w.abs()));
    if let Some(t) = title {
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="12">{t}</text>"#, x0 + 4.0, y0 + 12.0);
    }
    for e in chain.edges() {
        let (ax, ay) = map(pts[e.tail]);
        let (bx, by) = map(pts[e.head]);
        let width = 0.5 + 4.5 * e.w.abs() / wmax.max(f64::MIN_POSITIVE);
        let _ = writeln!(
            out,
            r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="black" stroke-width="{width:.2}"/>"#
        );
    }
    let boundary = chain.vertex_boundary();
    for (p, b) in pts.iter().zip(&boundary) {
        if *b == 0.0 {
            continue;
        }
        let (x, y) = map(*p);
        let fill = if *b > 0.0 { "#c0392b" } else { "#2471a3" };
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{fill}"/>"#);
    }
}

/// Single-panel drawing. Sinks are red, sources blue, stroke width grows
/// with multiplicity.
pub fn chain_to_svg(chain: &PolyChain) -> String {
    let mut s = format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL}" height="{PANEL}">"#);
    s.push('\n');
    draw(&mut s, chain, 0.0, 0.0, None);
    s.push_str("</svg>\n");
    s
}

/// Titled panels laid out four per row.
pub fn contact_sheet(panels: &[(String, PolyChain)]) -> String {
    let cols = panels.len().clamp(1, 4);
    let rows = panels.len().div_ceil(cols).max(1);
    let mut s = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}">"#,
        cols as f64 * PANEL,
        rows as f64 * PANEL
    );
    s.push('\n');
    for (i, (title, chain)) in panels.iter().enumerate() {
        let (x0, y0) = ((i % cols) as f64 * PANEL, (i / cols) as f64 * PANEL);
        draw(&mut s, chain, x0, y0, Some(title));
    }
    s.push_str("</svg>\n");
    s
}
