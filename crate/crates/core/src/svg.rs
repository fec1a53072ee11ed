use std::fmt::Write;

use crate::pencils::PolylinePath;
use crate::space::{Rect, SpaceApprox};

const PALETTE: [&str; 8] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn stage_colour(name: &str) -> &'static str {
    let h = name.bytes().fold(7u32, |h, b| h.wrapping_mul(31).wrapping_add(b as u32));
    PALETTE[(h % PALETTE.len() as u32) as usize]
}

/// SVG of the cubes of `space` with optional path overlays, stages coloured
/// by name. User coordinates are the ambient box with `y` pointing up.
pub fn render(space: &SpaceApprox, paths: &[PolylinePath], width_px: u32) -> String {
    let rects: Vec<Rect> = space.cubes.iter().map(|c| c.rect).collect();
    render_layers(space.ambient(), &[Layer { rects: &rects, fill: "#dddddd" }], paths, width_px)
}

pub struct Layer<'a> {
    pub rects: &'a [Rect],
    pub fill: &'a str,
}

pub fn render_layers(a: Rect, layers: &[Layer], paths: &[PolylinePath], width_px: u32) -> String {
    let height_px = (width_px as f64 * a.height() / a.width()).round() as u32;
    let stroke = a.width() / width_px as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width_px}" height="{height_px}" viewBox="{:e} {:e} {:e} {:e}">"#,
        a.x_lo,
        a.y_lo,
        a.width(),
        a.height()
    );
    let _ = writeln!(s, r#"<g transform="matrix(1 0 0 -1 0 {:e})">"#, a.y_lo + a.y_hi);
    for layer in layers {
        let _ = writeln!(s, r##"<g fill="{}" fill-opacity="0.7" stroke="#555555" stroke-width="{stroke:e}">"##, layer.fill);
        for r in layer.rects {
            let _ = writeln!(
                s,
                r#"<rect x="{:e}" y="{:e}" width="{:e}" height="{:e}"/>"#,
                r.x_lo,
                r.y_lo,
                r.width(),
                r.height()
            );
        }
        s.push_str("</g>\n");
    }
    for p in paths {
        for st in &p.stages {
            let pts: Vec<String> = p.vertices[st.start..=st.end].iter().map(|v| format!("{:e},{:e}", v.x, v.y)).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="{:e}" points="{}"><title>{}</title></polyline>"#,
                stage_colour(&st.name),
                2.0 * stroke,
                pts.join(" "),
                st.name
            );
        }
    }
    s.push_str("</g>\n</svg>\n");
    s
}
