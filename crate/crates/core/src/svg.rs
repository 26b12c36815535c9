//! Deterministic SVG drawings of planar frameworks.

use std::fmt::Write;

use crate::model::Framework;
use crate::norms::EdgeGeometry;
use crate::numeric::Scalar;

const PALETTE: [&str; 6] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];
const MARGIN: f64 = 40.0;
const RADIUS: f64 = 4.0;
const ARROW_HEAD: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgOptions {
    /// Pixels per unit length.
    pub scale: f64,
    /// Longest arrow as a fraction of one unit.
    pub arrow_length: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            scale: 100.0,
            arrow_length: 0.3,
        }
    }
}

fn num(x: f64) -> String {
    let r = (x * 100.0).round() / 100.0;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

/// Colour of a polyhedral edge: the class `{f, -f}` of its single active functional.
fn edge_style<T: Scalar>(fw: &Framework<T>, e: usize) -> (&'static str, bool) {
    match &fw.geometry()[e] {
        EdgeGeometry::PolyhedralActive { active, .. } if active.len() == 1 => {
            let fs = fw.norm().functionals();
            let f = &fs[active[0]];
            let neg: Vec<T> = f.iter().map(|x| -x.clone()).collect();
            let class = fs
                .iter()
                .position(|g| g == f || *g == neg)
                .expect("active functional is listed");
            // Classes are numbered by first appearance of either sign.
            let rank = (0..class)
                .filter(|&k| {
                    let g = &fs[k];
                    let gneg: Vec<T> = g.iter().map(|x| -x.clone()).collect();
                    fs[..k].iter().all(|h| *h != gneg)
                })
                .count();
            (PALETTE[rank % PALETTE.len()], false)
        }
        EdgeGeometry::PolyhedralActive { .. } | EdgeGeometry::ZeroLength => ("#000000", true),
        EdgeGeometry::Smooth(_) => ("#000000", false),
    }
}

/// Renders the first two coordinates of every vertex; `flex` adds one arrow per moving vertex.
pub fn render_svg<T: Scalar>(fw: &Framework<T>, flex: Option<&[f64]>, opts: &SvgOptions) -> String {
    let pts: Vec<(f64, f64)> = fw
        .placement()
        .iter()
        .map(|p| {
            let x = p.first().map_or(0.0, Scalar::to_f64);
            let y = p.get(1).map_or(0.0, Scalar::to_f64);
            (x, y)
        })
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    if let Some(&(x, y)) = pts.first() {
        (x0, x1, y0, y1) = (x, x, y, y);
    }
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let s = opts.scale;
    let width = (x1 - x0) * s + 2.0 * MARGIN;
    let height = (y1 - y0) * s + 2.0 * MARGIN;
    let tx = |x: f64| (x - x0) * s + MARGIN;
    let ty = |y: f64| (y1 - y) * s + MARGIN;

    let mut out = String::new();
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        num(width),
        num(height),
        num(width),
        num(height)
    )
    .unwrap();

    let g = fw.graph();
    for (e, &(v, w)) in g.edges().iter().enumerate() {
        let (colour, dashed) = edge_style(fw, e);
        let dash = if dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        writeln!(
            out,
            r#"  <line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{colour}" stroke-width="2"{dash}><title>{}</title></line>"#,
            num(tx(pts[v].0)),
            num(ty(pts[v].1)),
            num(tx(pts[w].0)),
            num(ty(pts[w].1)),
            g.edge_label(e)
        )
        .unwrap();
    }
    for (name, &(x, y)) in g.vertex_names().iter().zip(&pts) {
        writeln!(
            out,
            r##"  <circle cx="{}" cy="{}" r="{RADIUS}" fill="#000000"><title>{name}</title></circle>"##,
            num(tx(x)),
            num(ty(y))
        )
        .unwrap();
    }

    if let Some(u) = flex {
        let d = fw.dim();
        let vecs: Vec<(f64, f64)> = (0..g.vertex_count())
            .map(|i| (u[i * d], if d > 1 { u[i * d + 1] } else { 0.0 }))
            .collect();
        let longest = vecs.iter().map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max);
        if longest > 0.0 {
            let k = opts.arrow_length * s / longest;
            for (&(x, y), &(a, b)) in pts.iter().zip(&vecs) {
                if a.hypot(b) <= 1e-9 * longest {
                    continue;
                }
                let (sx, sy) = (tx(x), ty(y));
                let (dx, dy) = (a * k, -b * k);
                let (ex, ey) = (sx + dx, sy + dy);
                writeln!(
                    out,
                    r##"  <path d="M {} {} L {} {}" stroke="#d62728" stroke-width="2" fill="none"/>"##,
                    num(sx),
                    num(sy),
                    num(ex),
                    num(ey)
                )
                .unwrap();
                let len = dx.hypot(dy);
                let (ux, uy) = (dx / len, dy / len);
                let (bx, by) = (ex - ux * ARROW_HEAD, ey - uy * ARROW_HEAD);
                let (px, py) = (-uy * ARROW_HEAD / 2.0, ux * ARROW_HEAD / 2.0);
                writeln!(
                    out,
                    r##"  <polygon points="{},{} {},{} {},{}" fill="#d62728"/>"##,
                    num(ex),
                    num(ey),
                    num(bx + px),
                    num(by + py),
                    num(bx - px),
                    num(by - py)
                )
                .unwrap();
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::linf_k4_square;
    use crate::model::Graph;
    use crate::norms::NormSpec;

    #[test]
    fn empty_canvas() {
        let g = Graph::new::<&str>(&[], &[]).unwrap();
        let fw = Framework::<f64>::new(g, vec![], NormSpec::euclidean(2).unwrap()).unwrap();
        let s = render_svg(&fw, None, &SvgOptions::default());
        assert!(s.contains("<svg") && s.ends_with("</svg>\n"));
        assert!(!s.contains("<circle"));
    }

    #[test]
    fn functional_classes_get_distinct_colours() {
        let fw = linf_k4_square();
        let s = render_svg(&fw, None, &SvgOptions::default());
        assert_eq!(s.matches("<line").count(), 6);
        // Sides are well-positioned, diagonals are not.
        assert_eq!(s.matches("stroke-dasharray").count(), 2);
        assert!(s.contains(PALETTE[0]) && s.contains(PALETTE[1]));
    }
}
