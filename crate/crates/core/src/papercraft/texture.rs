//! Per-triangle texture projection into the paper mesh's atlas.
//!
//! Every wrapped triangle gets its own orthographic frame looking down its
//! outward normal. The structure is rendered into that frame and the frame
//! is resampled into the triangle's UV footprint through the affine map
//! between the triangle's screen and UV corners.

use rayon::prelude::*;

use super::paper::{PaperMesh, WrappedPaperMesh};
use crate::color::{blend_color, ColorRgb};
use crate::error::{invalid, Result};
use crate::geom::{closest_point_on_triangle, triangle_normal, P2, P3};
use crate::image::{brighten, CompositeImage};
use crate::render::{render_structure_layer, Camera, RenderOptions};
use crate::scene::Structure;

pub const DEFAULT_ATLAS_RESOLUTION: usize = 2048;
pub const MIN_ATLAS_RESOLUTION: usize = 64;
pub const FRAME_MARGIN: f64 = 0.05;
pub const DEFAULT_SUPERSAMPLE: usize = 2;
const MAX_FRAME_SIDE: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct TextureAtlas {
    pub image: CompositeImage,
    pub resolution: usize,
    /// UV triangle per paper-mesh triangle.
    pub mapping: Vec<[P2; 3]>,
    /// Texels where a structure was seen.
    pub covered: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    /// Frame pixels per atlas texel along each axis.
    pub supersample: usize,
    pub render: RenderOptions,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            supersample: DEFAULT_SUPERSAMPLE,
            render: RenderOptions::default(),
        }
    }
}

/// Orthographic camera looking at triangle `corners` along `-normal`, with
/// the frame bounding the triangle plus a margin.
pub fn triangle_camera(corners: &[P3; 3], pixels_per_unit: f64) -> Option<Camera> {
    let n = triangle_normal(&corners[0], &corners[1], &corners[2])?;
    let edges = [
        corners[1] - corners[0],
        corners[2] - corners[1],
        corners[0] - corners[2],
    ];
    let longest = edges
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap();
    let k = longest.norm();
    let u = longest / k;
    let v = n.cross(&u);
    let c0 = P3::from((corners[0].coords + corners[1].coords + corners[2].coords) / 3.0);
    let (mut ulo, mut uhi, mut vlo, mut vhi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in corners {
        let d = p - c0;
        ulo = ulo.min(d.dot(&u));
        uhi = uhi.max(d.dot(&u));
        vlo = vlo.min(d.dot(&v));
        vhi = vhi.max(d.dot(&v));
    }
    let center = c0 + u * (0.5 * (ulo + uhi)) + v * (0.5 * (vlo + vhi));
    let hw = 0.5 * (uhi - ulo) * (1.0 + FRAME_MARGIN);
    let hh = 0.5 * (vhi - vlo) * (1.0 + FRAME_MARGIN);
    if !(hw > 0.0 && hh > 0.0) {
        return None;
    }
    let side = |h: f64| ((2.0 * h * pixels_per_unit).ceil() as usize).clamp(2, MAX_FRAME_SIDE);
    Camera::orthographic(
        center + n * k,
        center,
        v,
        hw,
        hh,
        1e-6 * k,
        2.0 * k,
        side(hw),
        side(hh),
    )
    .ok()
}

/// Barycentric coordinates of `p` in `t`.
fn barycentric(t: &[P2; 3], p: &P2) -> [f64; 3] {
    let d = (t[1] - t[0]).perp(&(t[2] - t[0]));
    let l1 = (p - t[0]).perp(&(t[2] - t[0])) / d;
    let l2 = (t[1] - t[0]).perp(&(p - t[0])) / d;
    [1.0 - l1 - l2, l1, l2]
}

/// Whether the open unit square at `(x, y)` meets triangle `t`.
fn square_meets_triangle(x: f64, y: f64, t: &[P2; 3]) -> bool {
    let sq = [
        P2::new(x, y),
        P2::new(x + 1.0, y),
        P2::new(x + 1.0, y + 1.0),
        P2::new(x, y + 1.0),
    ];
    let tlo = t[0].inf(&t[1]).inf(&t[2]);
    let thi = t[0].sup(&t[1]).sup(&t[2]);
    if thi.x <= x || tlo.x >= x + 1.0 || thi.y <= y || tlo.y >= y + 1.0 {
        return false;
    }
    let orient = (t[1] - t[0]).perp(&(t[2] - t[0])).signum();
    for i in 0..3 {
        let a = t[i];
        let b = t[(i + 1) % 3];
        // square entirely on the outer side of this edge
        if sq.iter().all(|q| (b - a).perp(&(q - a)) * orient <= 0.0) {
            return false;
        }
    }
    true
}

/// Frame pixel under `(sx, sy)`, or the nearest covered one of its eight
/// neighbours when the sample grazes the silhouette.
fn sample_pixel(alpha: &[f64], width: usize, height: usize, sx: f64, sy: f64) -> usize {
    let px = (sx.floor().max(0.0) as usize).min(width - 1);
    let py = (sy.floor().max(0.0) as usize).min(height - 1);
    let p = py * width + px;
    if alpha[p] > 0.0 {
        return p;
    }
    let mut best: Option<(f64, usize)> = None;
    for ny in py.saturating_sub(1)..(py + 2).min(height) {
        for nx in px.saturating_sub(1)..(px + 2).min(width) {
            let q = ny * width + nx;
            if alpha[q] > 0.0 {
                let d = (nx as f64 + 0.5 - sx).powi(2) + (ny as f64 + 0.5 - sy).powi(2);
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, q));
                }
            }
        }
    }
    best.map_or(p, |(_, q)| q)
}

struct TexelWrite {
    index: usize,
    edge: bool,
    color: ColorRgb,
    covered: bool,
}

/// Renders `structure` onto every wrapped triangle and resamples the frames
/// into the paper mesh's UV layout.
pub fn project_texture(
    wrapped: &WrappedPaperMesh,
    structure: &Structure,
    uv_paper: &PaperMesh,
    resolution: usize,
    opts: &ProjectionOptions,
) -> Result<TextureAtlas> {
    let uv = uv_paper
        .uv
        .as_ref()
        .ok_or_else(|| invalid("paper mesh has no UV coordinates"))?;
    if resolution < MIN_ATLAS_RESOLUTION || !resolution.is_power_of_two() {
        return Err(invalid(format!(
            "atlas resolution {resolution} must be a power of two >= {MIN_ATLAS_RESOLUTION}"
        )));
    }
    if wrapped.mesh.triangles != uv_paper.mesh.triangles {
        return Err(invalid("wrapped mesh topology differs from the paper mesh"));
    }
    if opts.supersample == 0 {
        return Err(invalid("supersample must be at least 1"));
    }
    let res = resolution as f64;
    let render = RenderOptions {
        parallel: false,
        ..opts.render
    };
    let writes: Vec<Vec<TexelWrite>> = (0..wrapped.mesh.triangle_count())
        .into_par_iter()
        .map(|t| {
            let corners = wrapped.mesh.corners(t);
            let uvt = uv.corners[t].map(|p| P2::new(p.x * res, p.y * res));
            let uv_area = (uvt[1] - uvt[0]).perp(&(uvt[2] - uvt[0]));
            if uv_area == 0.0 {
                return Vec::new();
            }
            let longest3 = (0..3)
                .map(|i| (corners[(i + 1) % 3] - corners[i]).norm())
                .fold(0.0, f64::max);
            let longest_uv = (0..3)
                .map(|i| (uvt[(i + 1) % 3] - uvt[i]).norm())
                .fold(0.0, f64::max);
            let Some(cam) = triangle_camera(&corners, longest_uv / longest3 * opts.supersample as f64)
            else {
                return Vec::new();
            };
            let layer = render_structure_layer(structure, wrapped.structure_index, &cam, &render);
            let screen: Vec<P2> = corners
                .iter()
                .map(|p| {
                    let (x, y, _) = cam.project(p);
                    P2::new(x, y)
                })
                .collect();
            let lo = uvt[0].inf(&uvt[1]).inf(&uvt[2]);
            let hi = uvt[0].sup(&uvt[1]).sup(&uvt[2]);
            let x0 = lo.x.floor().max(0.0) as usize;
            let y0 = lo.y.floor().max(0.0) as usize;
            let x1 = (hi.x.ceil() as usize).min(resolution);
            let y1 = (hi.y.ceil() as usize).min(resolution);
            let mut out = Vec::new();
            for y in y0..y1 {
                for x in x0..x1 {
                    let c = P2::new(x as f64 + 0.5, y as f64 + 0.5);
                    let mut l = barycentric(&uvt, &c);
                    let inside = l.iter().all(|v| *v >= 0.0);
                    if !inside {
                        if !square_meets_triangle(x as f64, y as f64, &uvt) {
                            continue;
                        }
                        // edge texels take the colour of the nearest point of the triangle
                        let lift = |p: &P2| P3::new(p.x, p.y, 0.0);
                        let q = closest_point_on_triangle(
                            &lift(&c),
                            &lift(&uvt[0]),
                            &lift(&uvt[1]),
                            &lift(&uvt[2]),
                        );
                        l = barycentric(&uvt, &P2::new(q.x, q.y)).map(|v| v.clamp(0.0, 1.0));
                    }
                    let sx = l[0] * screen[0].x + l[1] * screen[1].x + l[2] * screen[2].x;
                    let sy = l[0] * screen[0].y + l[1] * screen[1].y + l[2] * screen[2].y;
                    let p = sample_pixel(&layer.alpha, cam.width, cam.height, sx, sy);
                    let covered = layer.alpha[p] > 0.0;
                    out.push(TexelWrite {
                        index: y * resolution + x,
                        edge: !inside,
                        color: blend_color(ColorRgb::WHITE, layer.color[p], layer.alpha[p]),
                        covered,
                    });
                }
            }
            out
        })
        .collect();

    let mut image = CompositeImage::white(resolution, resolution);
    let mut covered = vec![false; resolution * resolution];
    // texels whose centre lies inside a triangle win over edge texels
    let mut owner: Vec<Option<bool>> = vec![None; resolution * resolution];
    for tri in &writes {
        for w in tri {
            let take = match owner[w.index] {
                None => true,
                Some(edge) => edge && !w.edge,
            };
            if take {
                owner[w.index] = Some(w.edge);
                image.pixels[w.index] = w.color;
                covered[w.index] = w.covered;
            }
        }
    }
    Ok(TextureAtlas {
        image,
        resolution,
        mapping: uv.corners.clone(),
        covered,
    })
}

/// Multiplies atlases texel by texel, then brightens.
pub fn combine_textures(atlases: &[TextureAtlas], brighten_target: f64) -> Result<TextureAtlas> {
    let first = atlases
        .first()
        .ok_or_else(|| invalid("no atlases to combine"))?;
    if atlases
        .iter()
        .any(|a| a.resolution != first.resolution || a.mapping != first.mapping)
    {
        return Err(invalid("atlases differ in resolution or UV mapping"));
    }
    let mut image = CompositeImage::white(first.resolution, first.resolution);
    let mut covered = vec![false; image.pixels.len()];
    for a in atlases {
        for (p, c) in image.pixels.iter_mut().enumerate() {
            *c = c.multiply(&a.image.pixels[p]);
            covered[p] |= a.covered[p];
        }
    }
    Ok(TextureAtlas {
        image: brighten(&image, brighten_target)?,
        resolution: first.resolution,
        mapping: first.mapping.clone(),
        covered,
    })
}
