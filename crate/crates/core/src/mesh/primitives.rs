use std::collections::HashMap;

use super::{Aabb, TriangleMesh};
use crate::error::{invalid, Result};
use crate::geom::P3;

/// Box enclosing every vertex of every structure.
pub fn bounding_box(structures: &[TriangleMesh]) -> Result<Aabb> {
    if structures.is_empty() {
        return Err(invalid("no structures"));
    }
    let mut lo = P3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    for m in structures {
        let (a, b) = m.aabb();
        lo = lo.inf(&a);
        hi = hi.sup(&b);
    }
    Aabb::new(lo, hi)
}

/// The 12-triangle closed box, outward-facing.
pub fn box_mesh(aabb: &Aabb) -> TriangleMesh {
    let (lo, hi) = (aabb.min, aabb.max);
    let vertices: Vec<P3> = (0..8)
        .map(|i| {
            P3::new(
                if i & 1 == 0 { lo.x } else { hi.x },
                if i & 2 == 0 { lo.y } else { hi.y },
                if i & 4 == 0 { lo.z } else { hi.z },
            )
        })
        .collect();
    const QUADS: [[usize; 4]; 6] = [
        [0, 4, 6, 2], // -x
        [1, 3, 7, 5], // +x
        [0, 1, 5, 4], // -y
        [2, 6, 7, 3], // +y
        [0, 2, 3, 1], // -z
        [4, 5, 7, 6], // +z
    ];
    let triangles = QUADS
        .iter()
        .flat_map(|&[a, b, c, d]| [[a, b, c], [a, c, d]])
        .collect();
    TriangleMesh {
        vertices,
        triangles,
        vertex_normals: None,
    }
}

/// Midpoint 1:4 subdivision applied `levels` times.
pub fn subdivide(mesh: &TriangleMesh, levels: u32) -> TriangleMesh {
    let mut current = TriangleMesh {
        vertices: mesh.vertices.clone(),
        triangles: mesh.triangles.clone(),
        vertex_normals: None,
    };
    for _ in 0..levels {
        current = subdivide_once(&current);
    }
    current
}

fn subdivide_once(mesh: &TriangleMesh) -> TriangleMesh {
    let mut vertices = mesh.vertices.clone();
    let mut midpoints: HashMap<[usize; 2], usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<P3>| -> usize {
        *midpoints.entry([a.min(b), a.max(b)]).or_insert_with(|| {
            vertices.push(nalgebra::center(&vertices[a], &vertices[b]));
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(mesh.triangles.len() * 4);
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    TriangleMesh {
        vertices,
        triangles,
        vertex_normals: None,
    }
}

/// Regular tetrahedron with unit edge length.
pub fn tetrahedron() -> TriangleMesh {
    let s = 1.0 / (2.0f64).sqrt();
    let vertices = vec![
        P3::new(1.0, 0.0, -s) * 0.5,
        P3::new(-1.0, 0.0, -s) * 0.5,
        P3::new(0.0, 1.0, s) * 0.5,
        P3::new(0.0, -1.0, s) * 0.5,
    ];
    let mut mesh = TriangleMesh {
        vertices,
        triangles: vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
        vertex_normals: None,
    };
    orient_outward(&mut mesh);
    mesh
}

/// Icosahedron subdivided `levels` times and pushed onto a sphere.
pub fn icosphere(levels: u32, radius: f64, center: P3) -> TriangleMesh {
    let t = (1.0 + 5.0f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ];
    let vertices = raw.iter().map(|&(x, y, z)| P3::new(x, y, z)).collect();
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let mut mesh = subdivide(
        &TriangleMesh {
            vertices,
            triangles,
            vertex_normals: None,
        },
        levels,
    );
    for v in &mut mesh.vertices {
        *v = center + v.coords.normalize() * radius;
    }
    mesh
}

/// Latitude/longitude sphere with `2 * slices * (stacks - 1)` triangles.
pub fn uv_sphere(radius: f64, center: P3, stacks: usize, slices: usize) -> TriangleMesh {
    assert!(stacks >= 2 && slices >= 3);
    let mut vertices = vec![center + nalgebra::Vector3::z() * radius];
    for i in 1..stacks {
        let phi = std::f64::consts::PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / slices as f64;
            vertices.push(
                center
                    + nalgebra::Vector3::new(
                        phi.sin() * theta.cos(),
                        phi.sin() * theta.sin(),
                        phi.cos(),
                    ) * radius,
            );
        }
    }
    vertices.push(center - nalgebra::Vector3::z() * radius);
    let south = vertices.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * slices + (j % slices);
    let mut triangles = Vec::new();
    for j in 0..slices {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let a = ring(i, j);
            let b = ring(i + 1, j);
            let c = ring(i + 1, j + 1);
            let d = ring(i, j + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    for j in 0..slices {
        triangles.push([south, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    TriangleMesh {
        vertices,
        triangles,
        vertex_normals: None,
    }
}

/// Flips every triangle if the signed volume is negative.
pub(crate) fn orient_outward(mesh: &mut TriangleMesh) {
    if signed_volume(mesh) < 0.0 {
        for t in &mut mesh.triangles {
            t.swap(1, 2);
        }
    }
}

pub(crate) fn signed_volume(mesh: &TriangleMesh) -> f64 {
    mesh.triangles
        .iter()
        .map(|&[a, b, c]| {
            let (a, b, c) = (
                mesh.vertices[a].coords,
                mesh.vertices[b].coords,
                mesh.vertices[c].coords,
            );
            a.dot(&b.cross(&c)) / 6.0
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_is_closed_and_outward() {
        let aabb = Aabb::new(P3::new(-1.0, -2.0, -3.0), P3::new(1.0, 2.0, 3.0)).unwrap();
        let m = box_mesh(&aabb);
        assert_eq!(m.triangle_count(), 12);
        assert!(m.validate().closed);
        assert!((signed_volume(&m) - 2.0 * 4.0 * 6.0).abs() < 1e-12);
    }

    #[test]
    fn subdivision_counts() {
        let aabb = Aabb::new(P3::origin(), P3::new(1.0, 1.0, 1.0)).unwrap();
        let b1 = subdivide(&box_mesh(&aabb), 1);
        assert_eq!(b1.triangle_count(), 48);
        assert_eq!(b1.vertices.len(), 26);
        assert!(b1.validate().closed);

        let t2 = subdivide(&tetrahedron(), 2);
        assert_eq!(t2.triangle_count(), 64);
        assert!(t2.validate().closed);
    }

    #[test]
    fn subdivision_levels_compose() {
        let t = tetrahedron();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(
                    subdivide(&t, a + b).triangle_count(),
                    subdivide(&subdivide(&t, a), b).triangle_count()
                );
            }
        }
    }

    #[test]
    fn new_vertices_are_edge_midpoints() {
        let t = tetrahedron();
        let s = subdivide(&t, 1);
        let topo = t.topology();
        assert_eq!(s.vertices.len(), 4 + topo.edges.len());
        for v in &s.vertices[4..] {
            let hit = topo.edges.iter().any(|e| {
                (nalgebra::center(&t.vertices[e.v[0]], &t.vertices[e.v[1]]) - v).norm() < 1e-15
            });
            assert!(hit);
        }
    }

    #[test]
    fn tetrahedron_has_unit_edges() {
        let t = tetrahedron();
        for e in t.topology().edges {
            let len = (t.vertices[e.v[0]] - t.vertices[e.v[1]]).norm();
            assert!((len - 1.0).abs() < 1e-12);
        }
        assert!(signed_volume(&t) > 0.0);
    }

    #[test]
    fn spheres_are_closed() {
        let ico = icosphere(3, 1.0, P3::origin());
        assert_eq!(ico.triangle_count(), 1280);
        assert!(ico.validate().closed);
        assert!(signed_volume(&ico) > 0.0);
        let uv = uv_sphere(2.0, P3::new(1.0, 0.0, 0.0), 10, 12);
        assert_eq!(uv.triangle_count(), 2 * 12 * 9);
        assert!(uv.validate().closed);
        assert!(signed_volume(&uv) > 0.0);
    }

    #[test]
    fn bounding_box_of_nothing_fails() {
        assert!(bounding_box(&[]).is_err());
    }
}
