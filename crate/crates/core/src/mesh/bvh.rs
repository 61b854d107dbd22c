//! Bounding-volume hierarchy for closest-surface-point queries across
//! several structures.

use super::TriangleMesh;
use crate::error::{invalid, Result};
use crate::geom::{closest_point_on_triangle, P3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceHit {
    pub point: P3,
    pub structure_index: usize,
    pub triangle_index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone)]
struct Node {
    min: P3,
    max: P3,
    /// Leaf: `[start, start + count)` into `order`. Inner: children indices.
    start: usize,
    count: usize,
    left: usize,
    right: usize,
}

/// Immutable spatial index over the triangles of one or more meshes.
#[derive(Debug, Clone)]
pub struct SurfaceIndex {
    tris: Vec<[P3; 3]>,
    ids: Vec<(usize, usize)>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl SurfaceIndex {
    pub fn new(structures: &[TriangleMesh]) -> Result<Self> {
        if structures.is_empty() {
            return Err(invalid("closest-point query needs at least one structure"));
        }
        let mut tris = Vec::new();
        let mut ids = Vec::new();
        for (s, mesh) in structures.iter().enumerate() {
            if mesh.triangles.is_empty() {
                return Err(invalid(format!("structure {s} has no triangles")));
            }
            for t in 0..mesh.triangles.len() {
                tris.push(mesh.corners(t));
                ids.push((s, t));
            }
        }
        let centroids: Vec<P3> = tris
            .iter()
            .map(|[a, b, c]| P3::from((a.coords + b.coords + c.coords) / 3.0))
            .collect();
        let mut index = SurfaceIndex {
            order: (0..tris.len()).collect(),
            tris,
            ids,
            nodes: Vec::new(),
        };
        let n = index.order.len();
        index.build(0, n, &centroids);
        Ok(index)
    }

    pub fn for_mesh(mesh: &TriangleMesh) -> Result<Self> {
        Self::new(std::slice::from_ref(mesh))
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    fn build(&mut self, start: usize, end: usize, centroids: &[P3]) -> usize {
        let mut min = P3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut max = -min;
        let mut cmin = min;
        let mut cmax = max;
        for &i in &self.order[start..end] {
            for p in &self.tris[i] {
                min = min.inf(p);
                max = max.sup(p);
            }
            cmin = cmin.inf(&centroids[i]);
            cmax = cmax.sup(&centroids[i]);
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            min,
            max,
            start,
            count: end - start,
            left: 0,
            right: 0,
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let ext = cmax - cmin;
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a][axis]
                .total_cmp(&centroids[b][axis])
                .then(a.cmp(&b))
        });
        let left = self.build(start, mid, centroids);
        let right = self.build(mid, end, centroids);
        let node = &mut self.nodes[id];
        node.left = left;
        node.right = right;
        node.count = 0;
        id
    }

    fn box_dist2(node: &Node, p: &P3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = if p[k] < node.min[k] {
                node.min[k] - p[k]
            } else if p[k] > node.max[k] {
                p[k] - node.max[k]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }

    /// Nearest surface point. Ties resolve to the lowest
    /// `(structure_index, triangle_index)`.
    pub fn closest(&self, query: &P3) -> SurfaceHit {
        let mut best: Option<(f64, (usize, usize), P3)> = None;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if let Some((bd, _, _)) = best {
                if Self::box_dist2(node, query) > bd {
                    continue;
                }
            }
            if node.count > 0 {
                for &i in &self.order[node.start..node.start + node.count] {
                    let [a, b, c] = &self.tris[i];
                    let p = closest_point_on_triangle(query, a, b, c);
                    let d2 = (p - query).norm_squared();
                    let better = match best {
                        None => true,
                        Some((bd, bid, _)) => d2 < bd || (d2 == bd && self.ids[i] < bid),
                    };
                    if better {
                        best = Some((d2, self.ids[i], p));
                    }
                }
            } else {
                let dl = Self::box_dist2(&self.nodes[node.left], query);
                let dr = Self::box_dist2(&self.nodes[node.right], query);
                // nearer child popped first
                if dl <= dr {
                    stack.push(node.right);
                    stack.push(node.left);
                } else {
                    stack.push(node.left);
                    stack.push(node.right);
                }
            }
        }
        let (d2, (s, t), point) = best.expect("index is never empty");
        SurfaceHit {
            point,
            structure_index: s,
            triangle_index: t,
            distance: d2.sqrt(),
        }
    }
}

/// Convenience wrapper building a throwaway index.
pub fn closest_surface_point(query: &P3, structures: &[TriangleMesh]) -> Result<SurfaceHit> {
    Ok(SurfaceIndex::new(structures)?.closest(query))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{icosphere, tetrahedron};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(query: &P3, structures: &[TriangleMesh]) -> (f64, usize, usize) {
        let mut best = (f64::INFINITY, 0, 0);
        for (s, m) in structures.iter().enumerate() {
            for t in 0..m.triangles.len() {
                let [a, b, c] = m.corners(t);
                let d = (closest_point_on_triangle(query, &a, &b, &c) - query).norm_squared();
                if d < best.0 {
                    best = (d, s, t);
                }
            }
        }
        (best.0.sqrt(), best.1, best.2)
    }

    fn random_mesh(rng: &mut ChaCha8Rng, n: usize) -> TriangleMesh {
        let mut v = Vec::new();
        let mut t = Vec::new();
        for i in 0..n {
            let base = P3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            for _ in 0..3 {
                v.push(
                    base + nalgebra::Vector3::new(
                        rng.gen_range(-0.2..0.2),
                        rng.gen_range(-0.2..0.2),
                        rng.gen_range(-0.2..0.2),
                    ),
                );
            }
            t.push([3 * i, 3 * i + 1, 3 * i + 2]);
        }
        TriangleMesh::new(v, t).unwrap()
    }

    #[test]
    fn sphere_from_center() {
        let s = icosphere(3, 1.0, P3::origin());
        let hit = SurfaceIndex::for_mesh(&s).unwrap().closest(&P3::origin());
        assert!(hit.distance <= 1.0 && hit.distance > 0.98);
    }

    #[test]
    fn query_on_vertex() {
        let t = tetrahedron();
        let idx = SurfaceIndex::for_mesh(&t).unwrap();
        let hit = idx.closest(&t.vertices[2]);
        assert_eq!(hit.distance, 0.0);
        assert_eq!(hit.point, t.vertices[2]);
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for round in 0..4 {
            let meshes = vec![random_mesh(&mut rng, 200), random_mesh(&mut rng, 200 + round)];
            let idx = SurfaceIndex::new(&meshes).unwrap();
            for _ in 0..200 {
                let q = P3::new(
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                );
                let hit = idx.closest(&q);
                let (d, s, t) = brute_force(&q, &meshes);
                assert!((hit.distance - d).abs() <= 1e-9 * 4.0);
                assert_eq!((hit.structure_index, hit.triangle_index), (s, t));
                assert!(((hit.point - q).norm() - hit.distance).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ties_prefer_lowest_structure() {
        let t = tetrahedron();
        let meshes = vec![t.clone(), t];
        let hit = SurfaceIndex::new(&meshes)
            .unwrap()
            .closest(&P3::new(0.0, 0.0, 5.0));
        assert_eq!(hit.structure_index, 0);
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(SurfaceIndex::new(&[]).is_err());
        assert!(closest_surface_point(&P3::origin(), &[]).is_err());
    }
}
