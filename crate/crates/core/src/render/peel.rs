use super::raster::{setup, Raster, Sample};
use super::{shade_fragment, Camera, RenderOptions, SceneTriangles};
use crate::color::{blend_color, ColorRgb};
use crate::error::{Error, Result};
use crate::image::CompositeImage;
use crate::scene::Structure;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fragment {
    pub depth: f64,
    pub structure_index: usize,
    pub triangle_index: usize,
    pub color: ColorRgb,
    pub alpha: f64,
}

/// Per-pixel fragments, front to back.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentList {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Vec<Fragment>>,
    pub passes: usize,
    /// Set when the pass limit was hit before a pass came back empty.
    pub truncated: bool,
}

impl FragmentList {
    pub fn at(&self, x: usize, y: usize) -> &[Fragment] {
        &self.pixels[y * self.width + x]
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    id: usize,
    sample: Sample,
}

fn key(origin: &[(usize, usize)], c: &Candidate) -> (f64, usize, usize) {
    let (s, t) = origin[c.id];
    (c.sample.depth, s, t)
}

fn peel_epsilon(camera: &Camera) -> f64 {
    1e-7 * (camera.far - camera.near)
}

/// Extracts per-pixel fragments front to back. Pass `k` keeps, per pixel,
/// the nearest fragment strictly farther than the depth kept by pass `k - 1`
/// (plus a small epsilon); ties go to the lowest structure, then triangle.
pub fn depth_peel(
    structures: &[Structure],
    camera: &Camera,
    opts: &RenderOptions,
) -> FragmentList {
    let (w, h) = (camera.width, camera.height);
    let (scene, tris) = SceneTriangles::collect(structures);
    let raster = Raster::new(camera, setup(camera, tris));
    let eps = peel_epsilon(camera);
    let mut pixels: Vec<Vec<Fragment>> = vec![Vec::new(); w * h];
    let mut prev = vec![f64::NEG_INFINITY; w * h];
    let mut passes = 0;
    let mut truncated = false;
    loop {
        let mut best: Vec<Option<Candidate>> = vec![None; w * h];
        raster.for_each_band(&mut best, opts.parallel, |row0, slice| {
            raster.scan_band(row0, |id, x, y, sample| {
                let p = y * w + x;
                if sample.depth <= prev[p] + eps {
                    return;
                }
                let cand = Candidate { id, sample };
                let slot = &mut slice[p - row0 * w];
                let better = match slot {
                    None => true,
                    Some(cur) => key(&scene.origin, &cand) < key(&scene.origin, cur),
                };
                if better {
                    *slot = Some(cand);
                }
            });
        });
        if best.iter().all(Option::is_none) {
            break;
        }
        if passes == opts.max_peel_passes {
            log::warn!(
                "depth peeling stopped after {} passes with fragments remaining",
                passes
            );
            truncated = true;
            break;
        }
        passes += 1;
        for (p, c) in best.into_iter().enumerate() {
            if let Some(c) = c {
                let (s, t) = scene.origin[c.id];
                let st = &structures[s];
                pixels[p].push(Fragment {
                    depth: c.sample.depth,
                    structure_index: s,
                    triangle_index: t,
                    color: shade_fragment(camera, st, t, &c.sample.bary, opts.ambient_floor),
                    alpha: st.opacity,
                });
                prev[p] = c.sample.depth;
            }
        }
    }
    FragmentList {
        width: w,
        height: h,
        pixels,
        passes,
        truncated,
    }
}

/// Reference for [`depth_peel`]: gathers every fragment of every pixel in
/// one sweep, sorts each list and drops entries within the peel epsilon of
/// the previously kept one.
pub fn fragment_sort_reference(
    structures: &[Structure],
    camera: &Camera,
    opts: &RenderOptions,
) -> FragmentList {
    let (w, h) = (camera.width, camera.height);
    let (scene, tris) = SceneTriangles::collect(structures);
    let raster = Raster::new(camera, setup(camera, tris));
    let eps = peel_epsilon(camera);
    let mut all: Vec<Vec<Candidate>> = vec![Vec::new(); w * h];
    raster.for_each_band(&mut all, false, |row0, slice| {
        raster.scan_band(row0, |id, x, y, sample| {
            slice[(y - row0) * w + x].push(Candidate { id, sample });
        });
    });
    let mut pixels = Vec::with_capacity(w * h);
    let mut passes = 0;
    for mut list in all {
        list.sort_by(|a, b| {
            key(&scene.origin, a)
                .partial_cmp(&key(&scene.origin, b))
                .unwrap()
        });
        let mut kept: Vec<Fragment> = Vec::new();
        for c in list {
            if let Some(last) = kept.last() {
                if c.sample.depth <= last.depth + eps {
                    continue;
                }
            }
            let (s, t) = scene.origin[c.id];
            kept.push(Fragment {
                depth: c.sample.depth,
                structure_index: s,
                triangle_index: t,
                color: shade_fragment(camera, &structures[s], t, &c.sample.bary, opts.ambient_floor),
                alpha: structures[s].opacity,
            });
        }
        passes = passes.max(kept.len());
        pixels.push(kept);
    }
    FragmentList {
        width: w,
        height: h,
        pixels,
        passes,
        truncated: false,
    }
}

/// Folds each pixel's fragments front to back over `background`.
pub fn composite_fragments(
    fragments: &FragmentList,
    background: ColorRgb,
) -> Result<CompositeImage> {
    let mut img = CompositeImage::new(fragments.width, fragments.height, background);
    for (p, list) in fragments.pixels.iter().enumerate() {
        if list.windows(2).any(|w| !(w[0].depth < w[1].depth)) {
            return Err(Error::Internal(format!(
                "fragment list of pixel {p} is not sorted by depth"
            )));
        }
        img.pixels[p] = list
            .iter()
            .fold(background, |acc, f| blend_color(acc, f.color, f.alpha));
    }
    Ok(img)
}
