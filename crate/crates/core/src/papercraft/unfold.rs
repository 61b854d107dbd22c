//! Spanning-tree unfolding of a closed mesh into a planar net.
//!
//! Each attempt draws a random direction `c`, weights every dual edge by how
//! steep the mesh edge is along `c`, and folds along a minimum spanning tree
//! of those weights (steep edges become cuts). Triangles are laid out
//! breadth-first by hinge rotation; a triangle whose placement would overlap
//! its island starts a new island instead. The attempt with the fewest
//! islands wins, ties going to the lower attempt number.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::geom::{triangle_intersection_area, triangles_interiors_overlap, P2, P3, V2};
use crate::mesh::{EdgeTopology, TriangleMesh};

pub const DEFAULT_ATTEMPTS: usize = 32;
pub const MAX_TAB_DEPTH_MM: f64 = 5.0;
pub const TAB_DEPTH_FRACTION: f64 = 0.3;
/// Overlap area, relative to the layout area, below which two triangles
/// only touch.
pub const OVERLAP_AREA_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnfoldOptions {
    pub seed: u64,
    pub attempts: usize,
    /// When false an overlapping net is an error instead of a new island.
    pub allow_islands: bool,
    /// Millimetres per model unit used for tab geometry.
    pub mm_per_unit: f64,
}

impl Default for UnfoldOptions {
    fn default() -> Self {
        UnfoldOptions {
            seed: 0,
            attempts: DEFAULT_ATTEMPTS,
            allow_islands: true,
            mm_per_unit: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldDirection {
    Mountain,
    Valley,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Fold(FoldDirection),
    Cut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutEdge {
    pub vertices: [usize; 2],
    pub faces: [usize; 2],
    pub kind: EdgeKind,
    /// Angle between the two face normals in radians; negative when the
    /// edge is concave.
    pub fold_angle: f64,
    /// For cut edges, the face whose side carries the glue tab.
    pub tab_face: Option<usize>,
    /// For cut edges, the number printed next to both sides.
    pub label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tab {
    pub edge: usize,
    pub triangle: usize,
    /// `[a, a', b', b]`: the edge endpoints and the outer corners.
    pub polygon: [P2; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Island {
    pub triangles: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarLayout {
    pub islands: Vec<Island>,
    /// 2D corners per mesh triangle, in the triangle's corner order. Each
    /// island has its own frame with its bounding box starting at the origin.
    pub positions: Vec<[P2; 3]>,
    pub triangle_island: Vec<usize>,
    /// Indexed like the mesh's [`EdgeTopology`] edges.
    pub edges: Vec<LayoutEdge>,
    pub tabs: Vec<Tab>,
    /// Millimetres per model unit.
    pub scale: f64,
    pub attempt: usize,
    face_edges: Vec<[usize; 3]>,
}

impl PlanarLayout {
    pub fn triangle_count(&self) -> usize {
        self.positions.len()
    }

    /// Sum of triangle areas.
    pub fn layout_area(&self) -> f64 {
        self.positions
            .iter()
            .map(|t| 0.5 * ((t[1] - t[0]).perp(&(t[2] - t[0]))).abs())
            .sum()
    }

    pub fn overlap_threshold(&self) -> f64 {
        OVERLAP_AREA_EPS * self.layout_area()
    }

    /// Corner of `face` where `edge` starts.
    fn edge_corner(&self, edge: usize, face: usize) -> usize {
        self.face_edges[face]
            .iter()
            .position(|&e| e == edge)
            .expect("edge not on face")
    }

    /// The 2D segment of `edge` as drawn on triangle `face`.
    pub fn edge_segment(&self, edge: usize, face: usize) -> [P2; 2] {
        let i = self.edge_corner(edge, face);
        [self.positions[face][i], self.positions[face][(i + 1) % 3]]
    }

    /// The corner of `face` opposite `edge`.
    pub fn opposite_corner(&self, edge: usize, face: usize) -> P2 {
        self.positions[face][(self.edge_corner(edge, face) + 2) % 3]
    }

    /// Mesh edge ids of triangle `t`, edge `i` joining corners `i` and `i + 1`.
    pub fn face_edges(&self, t: usize) -> [usize; 3] {
        self.face_edges[t]
    }

    pub fn island_bbox(&self, island: usize) -> (P2, P2) {
        let mut lo = P2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = P2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &t in &self.islands[island].triangles {
            for p in &self.positions[t] {
                lo = lo.inf(p);
                hi = hi.sup(p);
            }
        }
        for tab in self.tabs.iter().filter(|t| self.triangle_island[t.triangle] == island) {
            for p in &tab.polygon {
                lo = lo.inf(p);
                hi = hi.sup(p);
            }
        }
        (lo, hi)
    }

    pub fn fold_count(&self) -> usize {
        self.edges
            .iter()
            .filter(|e| matches!(e.kind, EdgeKind::Fold(_)))
            .count()
    }

    pub fn cut_count(&self) -> usize {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Cut).count()
    }

    /// Same net with tabs rebuilt for a new millimetre scale.
    pub fn rescaled(&self, mm_per_unit: f64) -> PlanarLayout {
        let mut out = self.clone();
        out.scale = mm_per_unit;
        build_tabs(&mut out);
        out
    }
}

#[derive(Clone, Copy)]
struct Frame3 {
    p: [P3; 3],
}

fn rot90(v: V2) -> V2 {
    V2::new(-v.y, v.x)
}

/// 2D position of `c` given the placed edge `a -> b`, on the left when
/// `left` is set.
fn hinge(a2: P2, b2: P2, a3: &P3, b3: &P3, c3: &P3, left: bool, away_from: Option<P2>) -> P2 {
    let e3 = b3 - a3;
    let l2 = e3.norm_squared();
    let ac = c3 - a3;
    let e2 = b2 - a2;
    let n2 = e2.norm();
    if l2 == 0.0 || n2 == 0.0 {
        // collapsed hinge: any direction is isometric
        let r = ac.norm();
        let dir = away_from
            .map(|q| a2 - q)
            .filter(|d| d.norm() > 0.0)
            .map(|d| d.normalize())
            .unwrap_or(V2::new(1.0, 0.0));
        return a2 + dir * r;
    }
    let t = ac.dot(&e3) / l2;
    let h = (ac - e3 * t).norm();
    let perp = rot90(e2 / n2) * if left { 1.0 } else { -1.0 };
    a2 + e2 * t + perp * h
}

fn place_root(f: &Frame3) -> [P2; 3] {
    let a = P2::origin();
    let b = P2::new((f.p[1] - f.p[0]).norm(), 0.0);
    let c = hinge(a, b, &f.p[0], &f.p[1], &f.p[2], true, None);
    [a, b, c]
}

fn bbox2(t: &[P2; 3]) -> (P2, P2) {
    (t[0].inf(&t[1]).inf(&t[2]), t[0].sup(&t[1]).sup(&t[2]))
}

fn boxes_touch(a: &(P2, P2), b: &(P2, P2)) -> bool {
    a.0.x <= b.1.x && b.0.x <= a.1.x && a.0.y <= b.1.y && b.0.y <= a.1.y
}

fn overlaps(a: &[P2; 3], b: &[P2; 3], threshold: f64) -> bool {
    triangles_interiors_overlap(a, b) && triangle_intersection_area(a, b) > threshold
}

struct Attempt {
    positions: Vec<[P2; 3]>,
    island_of: Vec<usize>,
    islands: Vec<Vec<usize>>,
    tree_edge: Vec<bool>,
    overlaps: Vec<(usize, usize)>,
}

fn spanning_tree(
    topo: &EdgeTopology,
    mesh: &TriangleMesh,
    rng: &mut ChaCha8Rng,
) -> Vec<bool> {
    let c = loop {
        let v = nalgebra::Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n: f64 = v.norm();
        if n > 1e-3 && n <= 1.0 {
            break v / n;
        }
    };
    let mut weighted: Vec<(f64, usize)> = topo
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let d = mesh.vertices[e.v[1]] - mesh.vertices[e.v[0]];
            let len = d.norm();
            let steep = if len > 0.0 { (d / len).dot(&c).abs() } else { 0.0 };
            (steep + 1e-3 * rng.gen::<f64>(), i)
        })
        .collect();
    weighted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let n = mesh.triangle_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut in_tree = vec![false; topo.edges.len()];
    for (_, e) in weighted {
        if let [(f1, _), (f2, _)] = topo.edges[e].faces.as_slice() {
            let (r1, r2) = (find(&mut parent, *f1), find(&mut parent, *f2));
            if r1 != r2 {
                parent[r1] = r2;
                in_tree[e] = true;
            }
        }
    }
    in_tree
}

fn lay_out(
    mesh: &TriangleMesh,
    topo: &EdgeTopology,
    tree: &[bool],
    root: usize,
    split: bool,
    threshold: f64,
) -> Attempt {
    let n = mesh.triangle_count();
    let frames: Vec<Frame3> = (0..n).map(|t| Frame3 { p: mesh.corners(t) }).collect();
    let mut positions = vec![[P2::origin(); 3]; n];
    let mut boxes = vec![(P2::origin(), P2::origin()); n];
    let mut island_of = vec![usize::MAX; n];
    let mut islands: Vec<Vec<usize>> = Vec::new();
    let mut tree_edge = vec![false; topo.edges.len()];
    let mut overlapping = Vec::new();
    let mut visited = vec![false; n];

    let mut queue: VecDeque<(usize, Option<(usize, usize)>)> = VecDeque::new();
    // the tree spans every connected component; start one walk per component
    for start in std::iter::once(root).chain(0..n) {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back((start, None));
        while let Some((f, via)) = queue.pop_front() {
            let mut placed = None;
            if let Some((pf, e)) = via {
                let [a, b] = topo.edges[e].v;
                let ci = |tri: &[usize; 3], v: usize| tri.iter().position(|&x| x == v).unwrap();
                let pt = mesh.triangles[pf];
                let ct = mesh.triangles[f];
                let (a2, b2) = (positions[pf][ci(&pt, a)], positions[pf][ci(&pt, b)]);
                let (ia, ib) = (ci(&ct, a), ci(&ct, b));
                let ic = 3 - ia - ib;
                let left = (ia + 1) % 3 == ib;
                let pthird = positions[pf][3 - ci(&pt, a) - ci(&pt, b)];
                let c2 = hinge(
                    a2,
                    b2,
                    &frames[f].p[ia],
                    &frames[f].p[ib],
                    &frames[f].p[ic],
                    left,
                    Some(pthird),
                );
                let mut tri = [P2::origin(); 3];
                tri[ia] = a2;
                tri[ib] = b2;
                tri[ic] = c2;
                let isl = island_of[pf];
                let bb = bbox2(&tri);
                let hits: Vec<usize> = islands[isl]
                    .iter()
                    .copied()
                    .filter(|&o| boxes_touch(&bb, &boxes[o]) && overlaps(&tri, &positions[o], threshold))
                    .collect();
                if hits.is_empty() || !split {
                    overlapping.extend(hits.iter().map(|&o| (o.min(f), o.max(f))));
                    placed = Some((tri, isl));
                    tree_edge[e] = true;
                }
            }
            let (tri, isl) = placed.unwrap_or_else(|| {
                islands.push(Vec::new());
                (place_root(&frames[f]), islands.len() - 1)
            });
            positions[f] = tri;
            boxes[f] = bbox2(&tri);
            island_of[f] = isl;
            islands[isl].push(f);
            for &e in &topo.face_edges[f] {
                if tree[e] {
                    if let Some(g) = topo.edges[e].opposite(f) {
                        if !visited[g] {
                            visited[g] = true;
                            queue.push_back((g, Some((f, e))));
                        }
                    }
                }
            }
        }
    }
    Attempt {
        positions,
        island_of,
        islands,
        tree_edge,
        overlaps: overlapping,
    }
}

/// Rotates and translates every island so its bounding box is small and
/// starts at the origin.
fn normalise_islands(positions: &mut [[P2; 3]], islands: &[Vec<usize>]) {
    for island in islands {
        let mut best = (f64::INFINITY, 0.0f64);
        let mut angles: Vec<f64> = island
            .iter()
            .flat_map(|&t| {
                let p = positions[t];
                (0..3).map(move |i| {
                    let d = p[(i + 1) % 3] - p[i];
                    d.y.atan2(d.x)
                })
            })
            .collect();
        angles.push(0.0);
        for a in angles {
            let (s, c) = (-a).sin_cos();
            let mut lo = V2::new(f64::INFINITY, f64::INFINITY);
            let mut hi = -lo;
            for &t in island {
                for p in &positions[t] {
                    let q = V2::new(c * p.x - s * p.y, s * p.x + c * p.y);
                    lo = lo.inf(&q);
                    hi = hi.sup(&q);
                }
            }
            let area = (hi.x - lo.x) * (hi.y - lo.y);
            if area < best.0 * (1.0 - 1e-12) {
                best = (area, a);
            }
        }
        let (s, c) = (-best.1).sin_cos();
        let mut lo = V2::new(f64::INFINITY, f64::INFINITY);
        for &t in island {
            for p in positions[t].iter_mut() {
                *p = P2::new(c * p.x - s * p.y, s * p.x + c * p.y);
                lo = lo.inf(&p.coords);
            }
        }
        for &t in island {
            for p in positions[t].iter_mut() {
                *p -= lo;
            }
        }
    }
}

fn fold_angle(mesh: &TriangleMesh, f1: usize, f2: usize, edge: [usize; 2]) -> f64 {
    let n1 = mesh.face_normal(f1);
    let n2 = mesh.face_normal(f2);
    let angle = n1.cross(&n2).norm().atan2(n1.dot(&n2));
    let third = mesh.triangles[f2]
        .iter()
        .copied()
        .find(|v| !edge.contains(v))
        .unwrap();
    let side = (mesh.vertices[third] - mesh.vertices[edge[0]]).dot(&n1);
    if side > 0.0 {
        -angle
    } else {
        angle
    }
}

fn tab_polygon(seg: [P2; 2], third: P2, depth: f64) -> [P2; 4] {
    let (a, b) = (seg[0], seg[1]);
    let e = b - a;
    let len = e.norm();
    if len == 0.0 {
        return [a, a, b, b];
    }
    let u = e / len;
    let mut o = rot90(u);
    if (third - a).dot(&o) > 0.0 {
        o = -o;
    }
    let inset = depth.min(0.45 * len);
    [a, a + o * depth + u * inset, b + o * depth - u * inset, b]
}

fn tab_triangles(p: &[P2; 4]) -> [[P2; 3]; 2] {
    [[p[0], p[1], p[2]], [p[0], p[2], p[3]]]
}

fn build_tabs(layout: &mut PlanarLayout) {
    let threshold = layout.overlap_threshold();
    let mut tabs: Vec<Tab> = Vec::new();
    let mut chosen = vec![None; layout.edges.len()];
    for (ei, edge) in layout.edges.iter().enumerate() {
        if edge.kind != EdgeKind::Cut {
            continue;
        }
        let mut faces = edge.faces;
        faces.sort_unstable();
        let mut pick = None;
        for &f in &faces {
            let seg = layout.edge_segment(ei, f);
            let third = layout.opposite_corner(ei, f);
            let len_mm = (seg[1] - seg[0]).norm() * layout.scale;
            let depth = MAX_TAB_DEPTH_MM.min(TAB_DEPTH_FRACTION * len_mm) / layout.scale;
            let poly = tab_polygon(seg, third, depth);
            let island = layout.triangle_island[f];
            let clash = tab_triangles(&poly).iter().any(|tt| {
                layout.islands[island]
                    .triangles
                    .iter()
                    .any(|&o| overlaps(tt, &layout.positions[o], threshold))
                    || tabs
                        .iter()
                        .filter(|t| layout.triangle_island[t.triangle] == island)
                        .any(|t| {
                            tab_triangles(&t.polygon)
                                .iter()
                                .any(|u| overlaps(tt, u, threshold))
                        })
            });
            let tab = Tab {
                edge: ei,
                triangle: f,
                polygon: poly,
            };
            if !clash {
                pick = Some(tab);
                break;
            }
            pick.get_or_insert(tab);
        }
        let tab = pick.unwrap();
        chosen[ei] = Some(tab.triangle);
        tabs.push(tab);
    }
    for (e, c) in layout.edges.iter_mut().zip(chosen) {
        e.tab_face = c;
    }
    layout.tabs = tabs;
}

/// Unfolds a closed mesh into an isometric planar net.
pub fn unfold(mesh: &TriangleMesh, opts: &UnfoldOptions) -> Result<PlanarLayout> {
    if !mesh.validate().closed {
        return Err(invalid("unfolding needs a closed mesh"));
    }
    if opts.attempts == 0 || !(opts.mm_per_unit > 0.0) {
        return Err(invalid("unfold needs at least one attempt and a positive scale"));
    }
    let topo = mesh.topology();
    let n = mesh.triangle_count();
    let threshold = OVERLAP_AREA_EPS * mesh.surface_area();
    let mut best: Option<(usize, Attempt)> = None;
    let mut fewest_overlaps: Option<Vec<(usize, usize)>> = None;
    for r in 0..opts.attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(r as u64);
        let tree = spanning_tree(&topo, mesh, &mut rng);
        let root = rng.gen_range(0..n);
        let attempt = lay_out(mesh, &topo, &tree, root, opts.allow_islands, threshold);
        if !opts.allow_islands && !attempt.overlaps.is_empty() {
            let mut ov = attempt.overlaps.clone();
            ov.sort_unstable();
            ov.dedup();
            if fewest_overlaps.as_ref().map_or(true, |b| ov.len() < b.len()) {
                fewest_overlaps = Some(ov);
            }
            continue;
        }
        let better = best
            .as_ref()
            .map_or(true, |(_, b)| attempt.islands.len() < b.islands.len());
        if better {
            let single = attempt.islands.len() == 1;
            best = Some((r, attempt));
            if single {
                break;
            }
        }
    }
    let Some((attempt_no, mut att)) = best else {
        return Err(Error::Unfold {
            attempts: opts.attempts,
            overlaps: fewest_overlaps.unwrap_or_default(),
        });
    };
    normalise_islands(&mut att.positions, &att.islands);
    let tol = 1e-9 * mesh.surface_area().sqrt();

    let mut edges = Vec::with_capacity(topo.edges.len());
    let mut next_label = 1;
    for (ei, e) in topo.edges.iter().enumerate() {
        let (f1, f2) = (e.faces[0].0, e.faces[1].0);
        let angle = fold_angle(mesh, f1, f2, e.v);
        let same_island = att.island_of[f1] == att.island_of[f2];
        let coincident = same_island && {
            let pos = |f: usize, v: usize| {
                let i = mesh.triangles[f].iter().position(|&x| x == v).unwrap();
                att.positions[f][i]
            };
            e.v.iter().all(|&v| (pos(f1, v) - pos(f2, v)).norm() <= tol)
        };
        let kind = if att.tree_edge[ei] || coincident {
            EdgeKind::Fold(if angle >= 0.0 {
                FoldDirection::Mountain
            } else {
                FoldDirection::Valley
            })
        } else {
            EdgeKind::Cut
        };
        let label = (kind == EdgeKind::Cut).then(|| {
            next_label += 1;
            next_label - 1
        });
        edges.push(LayoutEdge {
            vertices: e.v,
            faces: [f1, f2],
            kind,
            fold_angle: angle,
            tab_face: None,
            label,
        });
    }
    let mut layout = PlanarLayout {
        islands: att
            .islands
            .into_iter()
            .map(|triangles| Island { triangles })
            .collect(),
        positions: att.positions,
        triangle_island: att.island_of,
        edges,
        tabs: Vec::new(),
        scale: opts.mm_per_unit,
        attempt: attempt_no,
        face_edges: topo.face_edges.clone(),
    };
    build_tabs(&mut layout);
    Ok(layout)
}
