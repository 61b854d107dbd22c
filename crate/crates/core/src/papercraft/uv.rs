use super::packing::{largest_fitting_scale, shelf_pack};
use super::paper::PaperMesh;
use super::unfold::PlanarLayout;
use crate::error::{invalid, Result};
use crate::geom::P2;

/// Empty texels kept on every side of an island.
pub const UV_GUTTER_TEXELS: f64 = 2.0;

/// Texture coordinates per triangle corner. `u` grows to the right and `v`
/// downwards, both in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UvMap {
    pub resolution: usize,
    pub corners: Vec<[P2; 3]>,
    pub texels_per_unit: f64,
    /// UV rectangle of each island's content, without gutters.
    pub island_rects: Vec<(P2, P2)>,
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

/// Packs the islands of `layout` into the unit square at a uniform scale.
pub fn assign_uv(paper: &PaperMesh, layout: &PlanarLayout, resolution: usize) -> Result<PaperMesh> {
    let mesh = &paper.mesh;
    if layout.triangle_count() != mesh.triangle_count() {
        return Err(invalid(format!(
            "layout has {} triangles, mesh has {}",
            layout.triangle_count(),
            mesh.triangle_count()
        )));
    }
    for t in 0..mesh.triangle_count() {
        let c = mesh.corners(t);
        let p = layout.positions[t];
        for i in 0..3 {
            let l3 = (c[(i + 1) % 3] - c[i]).norm();
            let l2 = (p[(i + 1) % 3] - p[i]).norm();
            if (l3 - l2).abs() > 1e-6 * l3.max(1e-300) && (l3 - l2).abs() > 1e-12 {
                return Err(invalid(format!("layout triangle {t} does not match the mesh")));
            }
        }
    }
    if resolution < 8 {
        return Err(invalid("atlas resolution must be at least 8 texels"));
    }
    let res = resolution as f64;
    let g2 = 2.0 * UV_GUTTER_TEXELS;
    let boxes: Vec<(P2, P2)> = (0..layout.islands.len())
        .map(|i| content_bbox(layout, i))
        .collect();
    let sizes = |s: f64| -> Vec<(f64, f64)> {
        boxes
            .iter()
            .map(|(lo, hi)| ((hi.x - lo.x) * s + g2, (hi.y - lo.y) * s + g2))
            .collect()
    };
    let fits = |s: f64| shelf_pack(&sizes(s), res).is_some_and(|(_, h)| h <= res);
    let extent = boxes
        .iter()
        .map(|(lo, hi)| (hi.x - lo.x).max(hi.y - lo.y))
        .fold(0.0, f64::max);
    if !(extent > 0.0) {
        return Err(invalid("layout has zero extent"));
    }
    let scale = largest_fitting_scale((res - g2) / extent, fits)
        .ok_or_else(|| invalid("islands do not fit the atlas"))?;
    let (pos, _) = shelf_pack(&sizes(scale), res).unwrap();

    let mut corners = vec![[P2::origin(); 3]; mesh.triangle_count()];
    let mut island_rects = Vec::with_capacity(boxes.len());
    for (i, island) in layout.islands.iter().enumerate() {
        let (lo, hi) = boxes[i];
        let (ox, oy) = (pos[i].0 + UV_GUTTER_TEXELS, pos[i].1 + UV_GUTTER_TEXELS);
        let map = |p: &P2| {
            P2::new(
                (ox + (p.x - lo.x) * scale) / res,
                (oy + (hi.y - p.y) * scale) / res,
            )
        };
        for &t in &island.triangles {
            corners[t] = [
                map(&layout.positions[t][0]),
                map(&layout.positions[t][1]),
                map(&layout.positions[t][2]),
            ];
        }
        island_rects.push((
            P2::new(ox / res, oy / res),
            P2::new(
                (ox + (hi.x - lo.x) * scale) / res,
                (oy + (hi.y - lo.y) * scale) / res,
            ),
        ));
    }
    let mut out = paper.clone();
    out.uv = Some(UvMap {
        resolution,
        corners,
        texels_per_unit: scale,
        island_rects,
    });
    Ok(out)
}
