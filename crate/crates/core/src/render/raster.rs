//! Triangle setup and scan conversion shared by every render path.
//!
//! Coverage uses pixel-center sampling with a top-left fill rule. Edge
//! functions are evaluated from a canonical endpoint order, so two triangles
//! sharing an edge produce exactly opposite values and a closed mesh covers
//! every pixel exactly once per surface layer.

use rayon::prelude::*;

use super::camera::Camera;
use crate::geom::P3;

/// Rows per work unit when rasterizing in parallel.
const BAND_HEIGHT: usize = 16;

#[derive(Debug, Clone)]
pub(crate) struct ScreenTri {
    xy: [[f64; 2]; 3],
    depth: [f64; 3],
    /// Barycentric coordinates of each screen vertex relative to the
    /// unclipped source triangle.
    source_bary: [[f64; 3]; 3],
    source: usize,
    area2: f64,
    top_left: [bool; 3],
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
}

/// A covered pixel: depth along the view axis and barycentric weights
/// relative to the source triangle (perspective-correct).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sample {
    pub depth: f64,
    pub bary: [f64; 3],
}

#[derive(Clone, Copy)]
struct EyeVertex {
    x: f64,
    y: f64,
    depth: f64,
    bary: [f64; 3],
}

fn lerp_vertex(a: &EyeVertex, b: &EyeVertex, t: f64) -> EyeVertex {
    let l = |u: f64, v: f64| u + (v - u) * t;
    EyeVertex {
        x: l(a.x, b.x),
        y: l(a.y, b.y),
        depth: l(a.depth, b.depth),
        bary: [l(a.bary[0], b.bary[0]), l(a.bary[1], b.bary[1]), l(a.bary[2], b.bary[2])],
    }
}

#[inline]
fn edge_fn(a: &[f64; 2], b: &[f64; 2], p: &[f64; 2]) -> f64 {
    // canonical orientation so shared edges cancel exactly
    if (a[0], a[1]) <= (b[0], b[1]) {
        (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    } else {
        -((a[0] - b[0]) * (p[1] - b[1]) - (a[1] - b[1]) * (p[0] - b[0]))
    }
}

/// Transforms, near-clips and projects triangles. `tris` yields
/// `(source id, world corners)`.
pub(crate) fn setup<I>(camera: &Camera, tris: I) -> Vec<ScreenTri>
where
    I: IntoIterator<Item = (usize, [P3; 3])>,
{
    let b = camera.basis();
    let mut out = Vec::new();
    for (source, corners) in tris {
        let eye: Vec<EyeVertex> = corners
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = p - camera.position;
                let mut bary = [0.0; 3];
                bary[i] = 1.0;
                EyeVertex {
                    x: d.dot(&b.right),
                    y: d.dot(&b.up),
                    depth: d.dot(&b.forward),
                    bary,
                }
            })
            .collect();
        if eye.iter().all(|v| v.depth > camera.far) || eye.iter().all(|v| v.depth < camera.near) {
            continue;
        }
        let poly = clip_near(&eye, camera.near);
        if poly.len() < 3 {
            continue;
        }
        for k in 1..poly.len() - 1 {
            if let Some(t) = project_tri(camera, [poly[0], poly[k], poly[k + 1]], source) {
                out.push(t);
            }
        }
    }
    out
}

fn clip_near(poly: &[EyeVertex], near: f64) -> Vec<EyeVertex> {
    let mut out = Vec::with_capacity(4);
    for i in 0..poly.len() {
        let a = &poly[i];
        let b = &poly[(i + 1) % poly.len()];
        let ina = a.depth >= near;
        let inb = b.depth >= near;
        if ina {
            out.push(*a);
        }
        if ina != inb {
            let t = (near - a.depth) / (b.depth - a.depth);
            let mut v = lerp_vertex(a, b, t);
            v.depth = near;
            out.push(v);
        }
    }
    out
}

fn project_tri(camera: &Camera, v: [EyeVertex; 3], source: usize) -> Option<ScreenTri> {
    let mut xy = [[0.0; 2]; 3];
    for i in 0..3 {
        let (sx, sy) = camera.eye_to_screen(v[i].x, v[i].y, v[i].depth);
        xy[i] = [sx, sy];
    }
    let mut depth = [v[0].depth, v[1].depth, v[2].depth];
    let mut source_bary = [v[0].bary, v[1].bary, v[2].bary];
    let mut area2 = edge_fn(&xy[0], &xy[1], &xy[2]);
    if !area2.is_finite() || area2 == 0.0 {
        return None;
    }
    if area2 < 0.0 {
        xy.swap(1, 2);
        depth.swap(1, 2);
        source_bary.swap(1, 2);
        area2 = -area2;
    }
    let (w, h) = (camera.width as f64, camera.height as f64);
    let minx = xy.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let maxx = xy.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let miny = xy.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let maxy = xy.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
    // pixel x is covered only if x + 0.5 lies in [minx, maxx]
    let x0 = (minx - 0.5).ceil().max(0.0);
    let x1 = (maxx - 0.5).floor().min(w - 1.0);
    let y0 = (miny - 0.5).ceil().max(0.0);
    let y1 = (maxy - 0.5).floor().min(h - 1.0);
    if x0 > x1 || y0 > y1 {
        return None;
    }
    let mut top_left = [false; 3];
    for i in 0..3 {
        let a = xy[i];
        let b = xy[(i + 1) % 3];
        let dx = b[0] - a[0];
        let dy = b[1] - a[1];
        top_left[i] = (dy == 0.0 && dx > 0.0) || dy < 0.0;
    }
    Some(ScreenTri {
        xy,
        depth,
        source_bary,
        source,
        area2,
        top_left,
        x0: x0 as usize,
        x1: x1 as usize,
        y0: y0 as usize,
        y1: y1 as usize,
    })
}

impl ScreenTri {
    /// Visits covered pixels with rows in `[row_lo, row_hi)`.
    #[inline]
    fn scan<F: FnMut(usize, usize, Sample)>(
        &self,
        perspective: bool,
        row_lo: usize,
        row_hi: usize,
        mut f: F,
    ) {
        let ylo = self.y0.max(row_lo);
        let yhi = self.y1.min(row_hi.saturating_sub(1));
        if ylo > yhi || row_hi == 0 {
            return;
        }
        let inv_area = 1.0 / self.area2;
        for y in ylo..=yhi {
            let py = y as f64 + 0.5;
            for x in self.x0..=self.x1 {
                let p = [x as f64 + 0.5, py];
                let e = [
                    edge_fn(&self.xy[0], &self.xy[1], &p),
                    edge_fn(&self.xy[1], &self.xy[2], &p),
                    edge_fn(&self.xy[2], &self.xy[0], &p),
                ];
                let inside = (0..3).all(|i| e[i] > 0.0 || (e[i] == 0.0 && self.top_left[i]));
                if !inside {
                    continue;
                }
                // l_i is the weight of vertex i, opposite edge (i+1, i+2)
                let l = [e[1] * inv_area, e[2] * inv_area, e[0] * inv_area];
                let (depth, w) = if perspective {
                    let q = [l[0] / self.depth[0], l[1] / self.depth[1], l[2] / self.depth[2]];
                    let inv = q[0] + q[1] + q[2];
                    let d = 1.0 / inv;
                    (d, [q[0] * d, q[1] * d, q[2] * d])
                } else {
                    (
                        l[0] * self.depth[0] + l[1] * self.depth[1] + l[2] * self.depth[2],
                        l,
                    )
                };
                let mut bary = [0.0; 3];
                for k in 0..3 {
                    for (i, wi) in w.iter().enumerate() {
                        bary[k] += wi * self.source_bary[i][k];
                    }
                }
                f(x, y, Sample { depth, bary });
            }
        }
    }
}

/// Setup triangles binned into horizontal bands.
pub(crate) struct Raster {
    pub width: usize,
    pub height: usize,
    perspective: bool,
    far: f64,
    tris: Vec<ScreenTri>,
    bins: Vec<Vec<u32>>,
}

impl Raster {
    pub fn new(camera: &Camera, tris: Vec<ScreenTri>) -> Self {
        let n_bands = camera.height.div_ceil(BAND_HEIGHT);
        let mut bins = vec![Vec::new(); n_bands];
        for (i, t) in tris.iter().enumerate() {
            for band in bins
                .iter_mut()
                .take(t.y1 / BAND_HEIGHT + 1)
                .skip(t.y0 / BAND_HEIGHT)
            {
                band.push(i as u32);
            }
        }
        Raster {
            width: camera.width,
            height: camera.height,
            perspective: camera.is_perspective(),
            far: camera.far,
            tris,
            bins,
        }
    }

    /// Runs `per_band` over disjoint row bands of `buffer` (one entry per
    /// pixel). Each call receives the band's first row and its pixel slice.
    /// Results do not depend on `parallel` as long as `per_band` only
    /// touches its own slice.
    pub fn for_each_band<T, F>(&self, buffer: &mut [T], parallel: bool, per_band: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync,
    {
        let chunk = self.width * BAND_HEIGHT;
        if parallel {
            buffer
                .par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(band, slice)| per_band(band * BAND_HEIGHT, slice));
        } else {
            buffer
                .chunks_mut(chunk)
                .enumerate()
                .for_each(|(band, slice)| per_band(band * BAND_HEIGHT, slice));
        }
    }

    /// Visits every fragment in the band starting at `row0` with its source
    /// id. Fragments beyond the far plane are skipped.
    pub fn scan_band<F: FnMut(usize, usize, usize, Sample)>(&self, row0: usize, mut f: F) {
        let band = row0 / BAND_HEIGHT;
        let row_hi = (row0 + BAND_HEIGHT).min(self.height);
        for &ti in &self.bins[band] {
            let t = &self.tris[ti as usize];
            t.scan(self.perspective, row0, row_hi, |x, y, s| {
                if s.depth <= self.far {
                    f(t.source, x, y, s)
                }
            });
        }
    }
}
