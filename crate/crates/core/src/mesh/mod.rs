//! Indexed triangle meshes: construction, topology, validation and the
//! primitives needed to build an enclosing paper mesh.

mod bvh;
mod decimate;
mod obj;
mod primitives;

use std::collections::HashMap;

use crate::error::{invalid, Error, Result};
use crate::geom::{triangle_area, triangle_cross, P3, V3};

pub use bvh::{closest_surface_point, SurfaceHit, SurfaceIndex};
pub use decimate::decimate;
pub use obj::{format_g6, load_mesh, save_mesh};
pub use primitives::{
    bounding_box, box_mesh, icosphere, subdivide, tetrahedron, uv_sphere,
};

/// Relative area threshold under which a triangle counts as degenerate
/// (scaled by the squared bounding-box diagonal).
pub const DEGENERATE_AREA_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<P3>,
    /// Counter-clockwise seen from outside.
    pub triangles: Vec<[usize; 3]>,
    pub vertex_normals: Option<Vec<V3>>,
}

impl TriangleMesh {
    /// Builds a mesh, checking indices. Triangles are kept as given.
    pub fn new(vertices: Vec<P3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let n = vertices.len();
        if let Some((i, t)) = triangles
            .iter()
            .enumerate()
            .find(|(_, t)| t.iter().any(|&v| v >= n))
        {
            return Err(invalid(format!(
                "triangle {i} references vertex {:?} but mesh has {n} vertices",
                t
            )));
        }
        if vertices.iter().any(|v| !v.coords.iter().all(|c| c.is_finite())) {
            return Err(invalid("non-finite vertex coordinate"));
        }
        Ok(TriangleMesh {
            vertices,
            triangles,
            vertex_normals: None,
        })
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [P3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_normal(&self, t: usize) -> V3 {
        let [a, b, c] = self.corners(t);
        let n = triangle_cross(&a, &b, &c);
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            V3::zeros()
        }
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        triangle_area(&a, &b, &c)
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn aabb(&self) -> (P3, P3) {
        let mut lo = P3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = P3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.aabb();
        (hi - lo).norm()
    }

    fn degenerate_threshold(&self) -> f64 {
        let d = self.bbox_diagonal();
        DEGENERATE_AREA_EPS * d * d
    }

    pub fn is_degenerate(&self, t: usize) -> bool {
        let [a, b, c] = self.triangles[t];
        a == b || b == c || a == c || self.triangle_area(t) <= self.degenerate_threshold()
    }

    /// Removes degenerate triangles and returns how many were dropped.
    pub fn drop_degenerate(&mut self) -> usize {
        let before = self.triangles.len();
        let thresh = self.degenerate_threshold();
        let verts = &self.vertices;
        self.triangles.retain(|&[a, b, c]| {
            a != b
                && b != c
                && a != c
                && triangle_area(&verts[a], &verts[b], &verts[c]) > thresh
        });
        before - self.triangles.len()
    }

    /// Area-weighted average of incident face normals, normalized.
    pub fn area_weighted_vertex_normals(&self) -> Vec<V3> {
        let mut acc = vec![V3::zeros(); self.vertices.len()];
        for &[a, b, c] in &self.triangles {
            let n = triangle_cross(&self.vertices[a], &self.vertices[b], &self.vertices[c]);
            for v in [a, b, c] {
                acc[v] += n;
            }
        }
        acc.into_iter()
            .map(|n| {
                let len = n.norm();
                if len > 0.0 {
                    n / len
                } else {
                    n
                }
            })
            .collect()
    }

    pub fn topology(&self) -> EdgeTopology {
        EdgeTopology::build(self)
    }

    pub fn validate(&self) -> ValidationReport {
        let topo = self.topology();
        let mut boundary = 0;
        let mut nonmanifold = 0;
        for e in &topo.edges {
            match e.faces.as_slice() {
                [_] => boundary += 1,
                [(_, fa), (_, fb)] if fa != fb => {}
                _ => nonmanifold += 1,
            }
        }
        let degenerate_count = (0..self.triangles.len())
            .filter(|&t| self.is_degenerate(t))
            .count();
        ValidationReport {
            closed: boundary == 0 && nonmanifold == 0,
            manifold: nonmanifold == 0,
            degenerate_count,
            boundary_edges: boundary,
            nonmanifold_edges: nonmanifold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationReport {
    /// Every edge has exactly two incident triangles with opposite winding.
    pub closed: bool,
    /// No edge has more than two triangles or two equally-wound triangles.
    pub manifold: bool,
    pub degenerate_count: usize,
    pub boundary_edges: usize,
    pub nonmanifold_edges: usize,
}

/// Undirected edge with the faces using it. `forward` is true when the face
/// traverses the edge from `v[0]` to `v[1]`.
#[derive(Debug, Clone)]
pub struct Edge {
    pub v: [usize; 2],
    pub faces: Vec<(usize, bool)>,
}

impl Edge {
    /// The other face of a two-sided edge.
    pub fn opposite(&self, face: usize) -> Option<usize> {
        match self.faces.as_slice() {
            [(a, _), (b, _)] if *a == face => Some(*b),
            [(a, _), (b, _)] if *b == face => Some(*a),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EdgeTopology {
    pub edges: Vec<Edge>,
    /// `face_edges[t][i]` joins corner `i` and corner `(i + 1) % 3`.
    pub face_edges: Vec<[usize; 3]>,
    lookup: HashMap<[usize; 2], usize>,
}

impl EdgeTopology {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let mut edges: Vec<Edge> = Vec::with_capacity(mesh.triangles.len() * 3 / 2);
        let mut lookup = HashMap::with_capacity(mesh.triangles.len() * 3 / 2);
        let mut face_edges = Vec::with_capacity(mesh.triangles.len());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let mut fe = [0; 3];
            for i in 0..3 {
                let a = tri[i];
                let b = tri[(i + 1) % 3];
                let key = [a.min(b), a.max(b)];
                let id = *lookup.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        v: key,
                        faces: Vec::with_capacity(2),
                    });
                    edges.len() - 1
                });
                edges[id].faces.push((t, a < b));
                fe[i] = id;
            }
            face_edges.push(fe);
        }
        EdgeTopology {
            edges,
            face_edges,
            lookup,
        }
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.lookup.get(&[a.min(b), a.max(b)]).copied()
    }

    /// Triangles sharing an edge with `t`.
    pub fn face_neighbors(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.face_edges[t]
            .iter()
            .filter_map(move |&e| self.edges[e].opposite(t))
    }
}

/// Axis-aligned bounding box with strictly positive extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: P3,
    pub max: P3,
}

impl Aabb {
    pub fn new(min: P3, max: P3) -> Result<Self> {
        let ext = max - min;
        if !(ext.x > 0.0 && ext.y > 0.0 && ext.z > 0.0) {
            return Err(invalid(format!(
                "bounding box has non-positive extent {:?}",
                [ext.x, ext.y, ext.z]
            )));
        }
        Ok(Aabb { min, max })
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn center(&self) -> P3 {
        nalgebra::center(&self.min, &self.max)
    }
}
