//! Quadric-error edge collapse that keeps closed meshes closed.
//!
//! Each vertex carries the sum of the plane quadrics of its incident faces.
//! Edges are collapsed cheapest-first into the point minimizing the combined
//! quadric. A collapse is refused when it would break the link condition
//! (creating a non-manifold edge or pinching the surface), flip an incident
//! face, or shrink the mesh below a tetrahedron.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

use super::TriangleMesh;
use crate::error::{invalid, Result};
use crate::geom::{triangle_cross, P3};

/// Minimum cosine between a face normal before and after a collapse.
const MAX_FLIP_COS: f64 = 0.0;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    a: usize,
    b: usize,
    ver_a: u32,
    ver_b: u32,
    target: P3,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

struct State {
    pos: Vec<P3>,
    quadric: Vec<Matrix4<f64>>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vert_faces: Vec<Vec<usize>>,
    vert_alive: Vec<bool>,
    version: Vec<u32>,
    live_faces: usize,
    live_verts: usize,
}

impl State {
    fn new(mesh: &TriangleMesh) -> Self {
        let n = mesh.vertices.len();
        let mut quadric = vec![Matrix4::zeros(); n];
        let mut vert_faces = vec![Vec::new(); n];
        for (f, &[a, b, c]) in mesh.triangles.iter().enumerate() {
            let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
            let cross = triangle_cross(&pa, &pb, &pc);
            let len = cross.norm();
            if len > 0.0 {
                let nrm = cross / len;
                let plane = Vector4::new(nrm.x, nrm.y, nrm.z, -nrm.dot(&pa.coords));
                // area weighting
                let q = plane * plane.transpose() * (0.5 * len);
                for v in [a, b, c] {
                    quadric[v] += q;
                }
            }
            for v in [a, b, c] {
                vert_faces[v].push(f);
            }
        }
        let used = vert_faces.iter().filter(|f| !f.is_empty()).count();
        State {
            pos: mesh.vertices.clone(),
            quadric,
            faces: mesh.triangles.clone(),
            face_alive: vec![true; mesh.triangles.len()],
            vert_alive: vert_faces.iter().map(|f| !f.is_empty()).collect(),
            vert_faces,
            version: vec![0; n],
            live_faces: mesh.triangles.len(),
            live_verts: used,
        }
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.vert_faces[v]
            .iter()
            .flat_map(|&f| self.faces[f])
            .filter(|&u| u != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn candidate(&self, a: usize, b: usize) -> Candidate {
        let q = self.quadric[a] + self.quadric[b];
        let eval = |p: &P3| {
            let h = Vector4::new(p.x, p.y, p.z, 1.0);
            (h.transpose() * q * h)[0].max(0.0)
        };
        let m = Matrix3::new(
            q[(0, 0)], q[(0, 1)], q[(0, 2)],
            q[(1, 0)], q[(1, 1)], q[(1, 2)],
            q[(2, 0)], q[(2, 1)], q[(2, 2)],
        );
        let rhs = -Vector3::new(q[(0, 3)], q[(1, 3)], q[(2, 3)]);
        let mid = nalgebra::center(&self.pos[a], &self.pos[b]);
        let edge_len = (self.pos[a] - self.pos[b]).norm();
        let mut options = vec![self.pos[a], self.pos[b], mid];
        if m.determinant().abs() > 1e-12 * m.norm().powi(3).max(1e-300) {
            if let Some(inv) = m.try_inverse() {
                let p = P3::from(inv * rhs);
                // reject far-away optima on nearly flat regions
                if (p - mid).norm() <= 2.0 * edge_len {
                    options.insert(0, p);
                }
            }
        }
        let (target, cost) = options
            .into_iter()
            .map(|p| {
                let c = eval(&p);
                (p, c)
            })
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        Candidate {
            cost,
            a: a.min(b),
            b: a.max(b),
            ver_a: self.version[a.min(b)],
            ver_b: self.version[a.max(b)],
            target,
        }
    }

    fn collapse_allowed(&self, c: &Candidate) -> bool {
        let (a, b) = (c.a, c.b);
        if self.live_verts <= 4 {
            return false;
        }
        let shared: Vec<usize> = self.vert_faces[a]
            .iter()
            .copied()
            .filter(|f| self.faces[*f].contains(&b))
            .collect();
        if shared.len() != 2 {
            return false;
        }
        let opposite: Vec<usize> = shared
            .iter()
            .map(|&f| {
                *self.faces[f]
                    .iter()
                    .find(|&&v| v != a && v != b)
                    .unwrap()
            })
            .collect();
        let na = self.neighbors(a);
        let nb = self.neighbors(b);
        let common: Vec<usize> = na.iter().copied().filter(|v| nb.binary_search(v).is_ok()).collect();
        let mut expected = opposite.clone();
        expected.sort_unstable();
        expected.dedup();
        if common != expected || expected.len() != 2 {
            return false;
        }
        // Collapsing would leave a doubled face when both wings are the only
        // faces around an opposite vertex.
        for &o in &opposite {
            if self.vert_faces[o].len() <= 3 {
                return false;
            }
        }
        for v in [a, b] {
            for &f in &self.vert_faces[v] {
                if shared.contains(&f) {
                    continue;
                }
                let tri = self.faces[f];
                let before = triangle_cross(&self.pos[tri[0]], &self.pos[tri[1]], &self.pos[tri[2]]);
                let moved: Vec<P3> = tri
                    .iter()
                    .map(|&u| if u == a || u == b { c.target } else { self.pos[u] })
                    .collect();
                let after = triangle_cross(&moved[0], &moved[1], &moved[2]);
                let (lb, la) = (before.norm(), after.norm());
                if la <= 1e-14 * lb.max(1e-300) {
                    return false;
                }
                if lb > 0.0 && before.dot(&after) / (lb * la) <= MAX_FLIP_COS {
                    return false;
                }
            }
        }
        true
    }

    fn collapse(&mut self, c: &Candidate) {
        let (a, b) = (c.a, c.b);
        self.pos[a] = c.target;
        let qb = self.quadric[b];
        self.quadric[a] += qb;
        let b_faces = std::mem::take(&mut self.vert_faces[b]);
        for f in b_faces {
            if self.faces[f].contains(&a) {
                self.face_alive[f] = false;
                self.live_faces -= 1;
                for v in self.faces[f] {
                    if v != b {
                        self.vert_faces[v].retain(|&g| g != f);
                    }
                }
            } else {
                for v in self.faces[f].iter_mut() {
                    if *v == b {
                        *v = a;
                    }
                }
                self.vert_faces[a].push(f);
            }
        }
        self.vert_alive[b] = false;
        self.live_verts -= 1;
        self.version[a] += 1;
        self.version[b] += 1;
    }
}

/// Simplifies a closed mesh towards `target_triangles`.
pub fn decimate(mesh: &TriangleMesh, target_triangles: usize) -> Result<TriangleMesh> {
    if target_triangles < 4 {
        return Err(invalid(format!(
            "decimation target {target_triangles} is below the 4-triangle minimum"
        )));
    }
    if mesh.triangles.len() <= target_triangles {
        return Ok(mesh.clone());
    }
    if !mesh.validate().closed {
        return Err(invalid("decimation requires a closed mesh"));
    }

    let mut st = State::new(mesh);
    let mut heap = BinaryHeap::new();
    for e in mesh.topology().edges {
        heap.push(Reverse(st.candidate(e.v[0], e.v[1])));
    }

    while st.live_faces > target_triangles {
        let Some(Reverse(c)) = heap.pop() else { break };
        if !st.vert_alive[c.a]
            || !st.vert_alive[c.b]
            || st.version[c.a] != c.ver_a
            || st.version[c.b] != c.ver_b
        {
            continue;
        }
        if !st.collapse_allowed(&c) {
            continue;
        }
        st.collapse(&c);
        // Edges around the one-ring may have been refused before; the local
        // geometry changed, so re-queue them all.
        let ring = st.neighbors(c.a);
        for &n in &ring {
            st.version[n] += 1;
        }
        for &n in &ring {
            for m in st.neighbors(n) {
                if n < m || !ring.contains(&m) {
                    heap.push(Reverse(st.candidate(n, m)));
                }
            }
        }
    }

    let mut remap = vec![usize::MAX; st.pos.len()];
    let mut vertices = Vec::with_capacity(st.live_verts);
    for (v, alive) in st.vert_alive.iter().enumerate() {
        if *alive {
            remap[v] = vertices.len();
            vertices.push(st.pos[v]);
        }
    }
    let triangles = st
        .faces
        .iter()
        .zip(&st.face_alive)
        .filter(|(_, alive)| **alive)
        .map(|(f, _)| [remap[f[0]], remap[f[1]], remap[f[2]]])
        .collect();
    TriangleMesh::new(vertices, triangles)
}
