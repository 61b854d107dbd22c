use super::raster::{setup, Raster, Sample};
use super::{depth_peel, shade_fragment, Camera, RenderOptions};
use crate::color::{blend_color, ColorRgb, Hue};
use crate::error::{Error, Result};
use crate::geom::{P2, P3};
use crate::image::{brighten, CompositeImage};
use crate::mesh::TriangleMesh;
use crate::scene::Structure;

use super::composite_fragments;

/// One structure rendered alone. `alpha` is zero where the structure does
/// not cover the pixel, and the color there is white.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerImage {
    pub width: usize,
    pub height: usize,
    pub color: Vec<ColorRgb>,
    pub alpha: Vec<f64>,
    pub structure_index: usize,
}

impl LayerImage {
    pub fn covered(&self, x: usize, y: usize) -> bool {
        self.alpha[y * self.width + x] > 0.0
    }
}

/// Nearest fragment per pixel; ties go to the lower triangle index.
pub(crate) fn nearest_fragments<I>(
    camera: &Camera,
    tris: I,
    parallel: bool,
) -> Vec<Option<(usize, Sample)>>
where
    I: IntoIterator<Item = (usize, [P3; 3])>,
{
    let w = camera.width;
    let raster = Raster::new(camera, setup(camera, tris));
    let mut buf: Vec<Option<(usize, Sample)>> = vec![None; w * camera.height];
    raster.for_each_band(&mut buf, parallel, |row0, slice| {
        raster.scan_band(row0, |id, x, y, s| {
            let slot = &mut slice[(y - row0) * w + x];
            let better = match slot {
                None => true,
                Some((cid, cs)) => (s.depth, id) < (cs.depth, *cid),
            };
            if better {
                *slot = Some((id, s));
            }
        });
    });
    buf
}

fn mesh_triangles(mesh: &TriangleMesh) -> impl Iterator<Item = (usize, [P3; 3])> + '_ {
    (0..mesh.triangle_count()).map(move |t| (t, mesh.corners(t)))
}

/// Z-buffered, shaded rendering of a single structure.
pub fn render_structure_layer(
    structure: &Structure,
    structure_index: usize,
    camera: &Camera,
    opts: &RenderOptions,
) -> LayerImage {
    let frags = nearest_fragments(camera, mesh_triangles(&structure.mesh), opts.parallel);
    let mut color = vec![ColorRgb::WHITE; frags.len()];
    let mut alpha = vec![0.0; frags.len()];
    for (p, f) in frags.iter().enumerate() {
        if let Some((t, s)) = f {
            color[p] = shade_fragment(camera, structure, *t, &s.bary, opts.ambient_floor);
            alpha[p] = structure.opacity;
        }
    }
    LayerImage {
        width: camera.width,
        height: camera.height,
        color,
        alpha,
        structure_index,
    }
}

/// Multiplies layers over `background`, in the order given.
pub fn composite_layers(layers: &[LayerImage], background: ColorRgb) -> Result<CompositeImage> {
    let Some(first) = layers.first() else {
        return Err(Error::InvalidArgument("no layers to composite".into()));
    };
    let (w, h) = (first.width, first.height);
    if layers.iter().any(|l| l.width != w || l.height != h) {
        return Err(Error::InvalidArgument("layer sizes differ".into()));
    }
    let mut img = CompositeImage::new(w, h, background);
    for (p, px) in img.pixels.iter_mut().enumerate() {
        *px = layers
            .iter()
            .fold(background, |acc, l| blend_color(acc, l.color[p], l.alpha[p]));
    }
    Ok(img)
}

/// Checks the printable-scene limits: at most three structures, distinct hues.
pub fn check_scene(structures: &[Structure]) -> Result<()> {
    if structures.len() > 3 {
        return Err(Error::Config(format!(
            "at most 3 structures can be separated by filters, got {}",
            structures.len()
        )));
    }
    let mut seen: Vec<Hue> = Vec::new();
    for s in structures {
        if seen.contains(&s.hue) {
            return Err(Error::Config(format!(
                "hue {} is used by more than one structure",
                s.hue
            )));
        }
        seen.push(s.hue);
    }
    Ok(())
}

/// Depth peel, composite over white, then brighten.
pub fn render_2d(
    structures: &[Structure],
    camera: &Camera,
    brighten_target: f64,
    opts: &RenderOptions,
) -> Result<CompositeImage> {
    check_scene(structures)?;
    camera.validate()?;
    let frags = depth_peel(structures, camera, opts);
    let img = composite_fragments(&frags, ColorRgb::WHITE)?;
    brighten(&img, brighten_target)
}

/// Per pixel, `triangle index + 1` of the visible triangle; 0 is background.
pub fn render_id_map(mesh: &TriangleMesh, camera: &Camera, opts: &RenderOptions) -> Vec<u32> {
    nearest_fragments(camera, mesh_triangles(mesh), opts.parallel)
        .into_iter()
        .map(|f| f.map_or(0, |(t, _)| t as u32 + 1))
        .collect()
}

/// Renders `mesh` with per-corner texture coordinates into `texture`
/// (nearest texel, no lighting). Uncovered pixels are white.
pub fn render_textured(
    mesh: &TriangleMesh,
    corner_uv: &[[P2; 3]],
    texture: &CompositeImage,
    camera: &Camera,
    opts: &RenderOptions,
) -> Result<CompositeImage> {
    if corner_uv.len() != mesh.triangle_count() {
        return Err(Error::InvalidArgument(format!(
            "{} uv triangles for {} mesh triangles",
            corner_uv.len(),
            mesh.triangle_count()
        )));
    }
    let frags = nearest_fragments(camera, mesh_triangles(mesh), opts.parallel);
    let mut img = CompositeImage::white(camera.width, camera.height);
    let (tw, th) = (texture.width as f64, texture.height as f64);
    for (p, f) in frags.iter().enumerate() {
        if let Some((t, s)) = f {
            let uv = &corner_uv[*t];
            let u = uv[0].x * s.bary[0] + uv[1].x * s.bary[1] + uv[2].x * s.bary[2];
            let v = uv[0].y * s.bary[0] + uv[1].y * s.bary[1] + uv[2].y * s.bary[2];
            let x = ((u * tw).floor().max(0.0) as usize).min(texture.width - 1);
            let y = ((v * th).floor().max(0.0) as usize).min(texture.height - 1);
            img.pixels[p] = texture.get(x, y);
        }
    }
    Ok(img)
}
