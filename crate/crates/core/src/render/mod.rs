//! Deterministic CPU rendering: per-structure layers, depth peeling and
//! the multiplicative composite.

mod camera;
mod layer;
mod peel;
pub(crate) mod raster;

pub use camera::{Camera, Projection};
pub use layer::{
    check_scene, composite_layers, render_2d, render_id_map, render_structure_layer, render_textured,
    LayerImage,
};
pub use peel::{composite_fragments, depth_peel, fragment_sort_reference, Fragment, FragmentList};

use crate::color::{ColorRgb, Hue};
use crate::geom::{P3, V3};
use crate::scene::Structure;

pub const DEFAULT_AMBIENT_FLOOR: f64 = 0.25;
pub const DEFAULT_MAX_PEEL_PASSES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub ambient_floor: f64,
    pub parallel: bool,
    pub max_peel_passes: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            ambient_floor: DEFAULT_AMBIENT_FLOOR,
            parallel: true,
            max_peel_passes: DEFAULT_MAX_PEEL_PASSES,
        }
    }
}

/// Two-sided Lambert term applied to the hue's nonzero channels only.
pub fn shade(hue: Hue, normal: &V3, light_dir: &V3, ambient_floor: f64) -> ColorRgb {
    let l = normal.dot(light_dir).abs().clamp(ambient_floor.min(1.0), 1.0);
    let c = hue.color();
    ColorRgb {
        r: c.r * l,
        g: c.g * l,
        b: c.b * l,
    }
}

/// Headlight direction at a world point: towards the viewer.
pub(crate) fn headlight(camera: &Camera, p: &P3) -> V3 {
    if camera.is_perspective() {
        let d = camera.position - p;
        let n = d.norm();
        if n > 0.0 {
            return d / n;
        }
    }
    -camera.forward()
}

/// All triangles of a scene flattened into one index space.
pub(crate) struct SceneTriangles {
    /// `(structure, triangle)` per global id.
    pub origin: Vec<(usize, usize)>,
}

impl SceneTriangles {
    pub fn collect(structures: &[Structure]) -> (Self, Vec<(usize, [P3; 3])>) {
        let mut origin = Vec::new();
        let mut tris = Vec::new();
        for (s, st) in structures.iter().enumerate() {
            for t in 0..st.mesh.triangle_count() {
                tris.push((origin.len(), st.mesh.corners(t)));
                origin.push((s, t));
            }
        }
        (SceneTriangles { origin }, tris)
    }
}

pub(crate) fn shade_fragment(
    camera: &Camera,
    structure: &Structure,
    triangle: usize,
    bary: &[f64; 3],
    ambient_floor: f64,
) -> ColorRgb {
    let c = structure.mesh.corners(triangle);
    let p = P3::from(c[0].coords * bary[0] + c[1].coords * bary[1] + c[2].coords * bary[2]);
    let n = structure.mesh.face_normal(triangle);
    shade(structure.hue, &n, &headlight(camera, &p), ambient_floor)
}
