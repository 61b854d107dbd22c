//! Printable SVG net: textured triangles, fold lines and cut lines with
//! glue tabs and mating labels.

use std::fmt::Write as _;

use base64::Engine;
use nalgebra::Matrix3;

use super::packing::{largest_fitting_scale, shelf_pack};
use super::texture::TextureAtlas;
use super::unfold::{EdgeKind, FoldDirection, PlanarLayout, MAX_TAB_DEPTH_MM};
use crate::error::{invalid, Error, Result};
use crate::geom::P2;

/// Space kept around every island for tabs, plus a small gap.
const ISLAND_PAD_MM: f64 = MAX_TAB_DEPTH_MM + 1.0;
/// Outward growth of texture clip paths so neighbouring triangles meet
/// without hairline gaps.
const CLIP_BLEED_MM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageSpec {
    pub width_mm: f64,
    pub height_mm: f64,
    pub margin_mm: f64,
    /// Scale the net to fill the page instead of using the layout's scale.
    pub auto_scale: bool,
}

impl Default for PageSpec {
    fn default() -> Self {
        PageSpec {
            width_mm: 210.0,
            height_mm: 297.0,
            margin_mm: 10.0,
            auto_scale: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrintSheet {
    pub svg: String,
    /// Millimetres per model unit actually used.
    pub scale: f64,
    pub triangles: usize,
    pub fold_lines: usize,
    pub cut_lines: usize,
    pub tabs: usize,
    pub labels: usize,
}

fn content_bbox(layout: &PlanarLayout, island: usize) -> (P2, P2) {
    let mut lo = P2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = P2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &t in &layout.islands[island].triangles {
        for p in &layout.positions[t] {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
    }
    (lo, hi)
}

struct Placement {
    boxes: Vec<(P2, P2)>,
    offsets: Vec<(f64, f64)>,
    scale: f64,
    margin: f64,
}

impl Placement {
    fn map(&self, island: usize, p: &P2) -> P2 {
        let (lo, hi) = self.boxes[island];
        let (ox, oy) = self.offsets[island];
        P2::new(
            self.margin + ox + ISLAND_PAD_MM + (p.x - lo.x) * self.scale,
            self.margin + oy + ISLAND_PAD_MM + (hi.y - p.y) * self.scale,
        )
    }
}

fn pack(boxes: &[(P2, P2)], scale: f64, page: &PageSpec) -> Option<Vec<(f64, f64)>> {
    let w = page.width_mm - 2.0 * page.margin_mm;
    let h = page.height_mm - 2.0 * page.margin_mm;
    let sizes: Vec<(f64, f64)> = boxes
        .iter()
        .map(|(lo, hi)| {
            (
                (hi.x - lo.x) * scale + 2.0 * ISLAND_PAD_MM,
                (hi.y - lo.y) * scale + 2.0 * ISLAND_PAD_MM,
            )
        })
        .collect();
    let (pos, used) = shelf_pack(&sizes, w)?;
    (used <= h).then_some(pos)
}

fn fmt_pts(pts: &[P2]) -> String {
    pts.iter()
        .map(|p| format!("{:.4},{:.4}", p.x, p.y))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Grows a triangle outwards by `d` (miters capped at `3 d`).
fn bleed(t: &[P2; 3], d: f64) -> [P2; 3] {
    let mut out = *t;
    for i in 0..3 {
        let p = t[i];
        let a = t[(i + 2) % 3] - p;
        let b = t[(i + 1) % 3] - p;
        if a.norm() == 0.0 || b.norm() == 0.0 {
            continue;
        }
        let bis = a.normalize() + b.normalize();
        let half = 0.5 * a.normalize().angle(&b.normalize());
        if bis.norm() == 0.0 || half.sin() == 0.0 {
            continue;
        }
        let dist = (d / half.sin()).min(3.0 * d);
        out[i] = p - bis.normalize() * dist;
    }
    out
}

/// Affine map taking `src` corners to `dst` corners, as SVG matrix terms.
fn affine(src: &[P2; 3], dst: &[P2; 3]) -> Option<[f64; 6]> {
    let m = Matrix3::new(
        src[0].x, src[0].y, 1.0, src[1].x, src[1].y, 1.0, src[2].x, src[2].y, 1.0,
    );
    let inv = m.try_inverse()?;
    let xs = inv * nalgebra::Vector3::new(dst[0].x, dst[1].x, dst[2].x);
    let ys = inv * nalgebra::Vector3::new(dst[0].y, dst[1].y, dst[2].y);
    Some([xs[0], ys[0], xs[1], ys[1], xs[2], ys[2]])
}

/// Lays the net out on one page and writes the SVG document.
pub fn layout_to_print_sheet(
    layout: &PlanarLayout,
    atlas: &TextureAtlas,
    page: &PageSpec,
) -> Result<PrintSheet> {
    if atlas.mapping.len() != layout.triangle_count() {
        return Err(invalid("atlas mapping does not match the layout"));
    }
    let printable_w = page.width_mm - 2.0 * page.margin_mm;
    let printable_h = page.height_mm - 2.0 * page.margin_mm;
    if !(printable_w > 2.0 * ISLAND_PAD_MM && printable_h > 2.0 * ISLAND_PAD_MM) {
        return Err(invalid("page is too small for its margins"));
    }
    let boxes: Vec<(P2, P2)> = (0..layout.islands.len())
        .map(|i| content_bbox(layout, i))
        .collect();
    let extent = boxes
        .iter()
        .map(|(lo, hi)| (hi.x - lo.x).max(hi.y - lo.y))
        .fold(0.0, f64::max);
    if !(extent > 0.0) {
        return Err(invalid("layout has zero extent"));
    }
    let fits = |s: f64| pack(&boxes, s, page).is_some();
    let upper = printable_w.max(printable_h) / extent;
    let best = largest_fitting_scale(upper, fits);
    let scale = if page.auto_scale {
        best.ok_or_else(|| invalid("islands cannot fit the page at any scale"))?
    } else if fits(layout.scale) {
        layout.scale
    } else {
        return Err(Error::DoesNotFit {
            required_scale: best.unwrap_or(0.0),
        });
    };
    let layout = layout.rescaled(scale);
    let place = Placement {
        offsets: pack(&boxes, scale, page).unwrap(),
        boxes,
        scale,
        margin: page.margin_mm,
    };
    let at = |t: usize, p: &P2| place.map(layout.triangle_island[t], p);

    let mut png = Vec::new();
    atlas.image.write_png(&mut png)?;
    let b64 = base64::engine::general_purpose::STANDARD.encode(&png);
    let res = atlas.resolution as f64;

    let mut svg = String::new();
    let (w, h) = (page.width_mm, page.height_mm);
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" version="1.1" width="{w}mm" height="{h}mm" viewBox="0 0 {w} {h}">"#
    );
    svg.push_str("<defs>\n<style type=\"text/css\">\n");
    svg.push_str(".fold{fill:none;stroke:#555;stroke-width:0.2}\n");
    svg.push_str(".mountain{stroke-dasharray:3,1,0.6,1}\n");
    svg.push_str(".valley{stroke-dasharray:1.5,1}\n");
    svg.push_str(".tab-fold{fill:none;stroke:#999;stroke-width:0.15;stroke-dasharray:0.8,0.8}\n");
    svg.push_str(".cut,.tab{fill:none;stroke:#000;stroke-width:0.25}\n");
    svg.push_str(".tab{fill:#eee}\n");
    svg.push_str(".label{font-family:sans-serif;fill:#000;text-anchor:middle;dominant-baseline:central}\n");
    svg.push_str("</style>\n");
    let _ = writeln!(
        svg,
        r#"<image id="atlas" x="0" y="0" width="{0}" height="{0}" xlink:href="data:image/png;base64,{1}"/>"#,
        atlas.resolution, b64
    );
    let mut textured = Vec::new();
    for t in 0..layout.triangle_count() {
        let dst = layout.positions[t].map(|p| at(t, &p));
        let src = atlas.mapping[t].map(|p| P2::new(p.x * res, p.y * res));
        if let Some(m) = affine(&src, &dst) {
            let _ = writeln!(
                svg,
                r#"<clipPath id="clip{t}"><polygon points="{}"/></clipPath>"#,
                fmt_pts(&bleed(&dst, CLIP_BLEED_MM))
            );
            textured.push((t, m));
        }
    }
    svg.push_str("</defs>\n");

    svg.push_str("<g id=\"texture\">\n");
    for (t, m) in &textured {
        let _ = writeln!(
            svg,
            r##"<g clip-path="url(#clip{t})"><use xlink:href="#atlas" transform="matrix({:.9} {:.9} {:.9} {:.9} {:.6} {:.6})"/></g>"##,
            m[0], m[1], m[2], m[3], m[4], m[5]
        );
    }
    svg.push_str("</g>\n");

    let mut fold_lines = 0;
    svg.push_str("<g id=\"fold\">\n");
    for (ei, e) in layout.edges.iter().enumerate() {
        if let EdgeKind::Fold(dir) = e.kind {
            let f = e.faces[0];
            let [a, b] = layout.edge_segment(ei, f).map(|p| at(f, &p));
            let class = match dir {
                FoldDirection::Mountain => "fold mountain",
                FoldDirection::Valley => "fold valley",
            };
            let _ = writeln!(
                svg,
                r#"<line class="{class}" x1="{:.4}" y1="{:.4}" x2="{:.4}" y2="{:.4}"/>"#,
                a.x, a.y, b.x, b.y
            );
            fold_lines += 1;
        }
    }
    for tab in &layout.tabs {
        let [a, b] = [tab.polygon[0], tab.polygon[3]].map(|p| at(tab.triangle, &p));
        let _ = writeln!(
            svg,
            r#"<line class="tab-fold" x1="{:.4}" y1="{:.4}" x2="{:.4}" y2="{:.4}"/>"#,
            a.x, a.y, b.x, b.y
        );
    }
    svg.push_str("</g>\n");

    let (mut cut_lines, mut tabs, mut labels) = (0, 0, 0);
    svg.push_str("<g id=\"cut\">\n");
    for (ei, e) in layout.edges.iter().enumerate() {
        if e.kind != EdgeKind::Cut {
            continue;
        }
        for &f in &e.faces {
            let seg = layout.edge_segment(ei, f).map(|p| at(f, &p));
            if Some(f) == e.tab_face {
                let tab = layout.tabs.iter().find(|t| t.edge == ei).unwrap();
                let poly = tab.polygon.map(|p| at(f, &p));
                let _ = writeln!(svg, r#"<polyline class="tab" points="{}"/>"#, fmt_pts(&poly));
                tabs += 1;
            } else {
                let _ = writeln!(
                    svg,
                    r#"<line class="cut" x1="{:.4}" y1="{:.4}" x2="{:.4}" y2="{:.4}"/>"#,
                    seg[0].x, seg[0].y, seg[1].x, seg[1].y
                );
                cut_lines += 1;
            }
            if let Some(label) = e.label {
                let len = (seg[1] - seg[0]).norm();
                let third = at(f, &layout.opposite_corner(ei, f));
                let mid = P2::from((seg[0].coords + seg[1].coords) * 0.5);
                let size = (0.25 * len).clamp(1.0, 3.0);
                let inward = third - mid;
                let pos = if inward.norm() > 0.0 {
                    mid + inward.normalize() * (0.6 * size).min(0.3 * inward.norm())
                } else {
                    mid
                };
                let _ = writeln!(
                    svg,
                    r#"<text class="label" x="{:.4}" y="{:.4}" font-size="{:.2}">{label}</text>"#,
                    pos.x, pos.y, size
                );
                labels += 1;
            }
        }
    }
    svg.push_str("</g>\n</svg>\n");

    Ok(PrintSheet {
        svg,
        scale,
        triangles: textured.len(),
        fold_lines,
        cut_lines,
        tabs,
        labels,
    })
}

/// Plain-text assembly notes: glue pairs and fold directions.
pub fn assembly_text(layout: &PlanarLayout) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} triangles, {} islands, {} folds, {} glued edges",
        layout.triangle_count(),
        layout.islands.len(),
        layout.fold_count(),
        layout.cut_count()
    );
    s.push_str("\n[glue]\n");
    for e in &layout.edges {
        if let (Some(label), Some(tab)) = (e.label, e.tab_face) {
            let other = if e.faces[0] == tab { e.faces[1] } else { e.faces[0] };
            let _ = writeln!(
                s,
                "{label}: tab on triangle {tab} glues under triangle {other} (vertices {}-{}, {:+.1} deg)",
                e.vertices[0],
                e.vertices[1],
                e.fold_angle.to_degrees()
            );
        }
    }
    s.push_str("\n[fold]\n");
    for e in &layout.edges {
        if let EdgeKind::Fold(dir) = e.kind {
            let kind = match dir {
                FoldDirection::Mountain => "mountain",
                FoldDirection::Valley => "valley",
            };
            let _ = writeln!(
                s,
                "triangles {}-{} (vertices {}-{}): {kind} {:.1} deg",
                e.faces[0],
                e.faces[1],
                e.vertices[0],
                e.vertices[1],
                e.fold_angle.abs().to_degrees()
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_maps_corners() {
        let src = [P2::new(0.0, 0.0), P2::new(4.0, 0.0), P2::new(0.0, 2.0)];
        let dst = [P2::new(10.0, 5.0), P2::new(10.0, 9.0), P2::new(8.0, 5.0)];
        let m = affine(&src, &dst).unwrap();
        for (s, d) in src.iter().zip(&dst) {
            let x = m[0] * s.x + m[2] * s.y + m[4];
            let y = m[1] * s.x + m[3] * s.y + m[5];
            assert!((x - d.x).abs() < 1e-12 && (y - d.y).abs() < 1e-12);
        }
        assert!(affine(&[src[0], src[0], src[1]], &dst).is_none());
    }

    #[test]
    fn bleed_grows_triangle() {
        let t = [P2::new(0.0, 0.0), P2::new(10.0, 0.0), P2::new(0.0, 10.0)];
        let b = bleed(&t, 0.1);
        assert!(b[0].x < 0.0 && b[0].y < 0.0);
        let area = |t: &[P2; 3]| 0.5 * (t[1] - t[0]).perp(&(t[2] - t[0])).abs();
        assert!(area(&b) > area(&t));
    }
}
