use rayon::prelude::*;

use super::uv::UvMap;
use crate::error::{invalid, Result};
use crate::geom::P3;
use crate::mesh::{bounding_box, box_mesh, subdivide, SurfaceIndex, TriangleMesh};

/// The enclosing mesh that becomes the papercraft.
#[derive(Debug, Clone, PartialEq)]
pub struct PaperMesh {
    pub mesh: TriangleMesh,
    pub subdivision_level: u32,
    pub uv: Option<UvMap>,
}

/// Topology-identical copy of a paper mesh wrapped onto one structure.
#[derive(Debug, Clone, PartialEq)]
pub struct WrappedPaperMesh {
    pub mesh: TriangleMesh,
    pub structure_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrapParams {
    /// Alternations of Laplacian smoothing and re-projection.
    pub smoothing_iters: usize,
    /// Distance to push vertices outwards along their normals after the
    /// final projection (model units).
    pub offset: f64,
}

impl Default for WrapParams {
    fn default() -> Self {
        WrapParams {
            smoothing_iters: 0,
            offset: 0.0,
        }
    }
}

fn project(vertices: &mut [P3], index: &SurfaceIndex) {
    vertices
        .par_iter_mut()
        .for_each(|v| *v = index.closest(v).point);
}

fn neighbours(mesh: &TriangleMesh) -> Vec<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); mesh.vertices.len()];
    for e in &mesh.topology().edges {
        adj[e.v[0]].push(e.v[1]);
        adj[e.v[1]].push(e.v[0]);
    }
    adj
}

fn shrink_wrap(mesh: &mut TriangleMesh, index: &SurfaceIndex, params: &WrapParams) {
    project(&mut mesh.vertices, index);
    if params.smoothing_iters > 0 {
        let adj = neighbours(mesh);
        for _ in 0..params.smoothing_iters {
            let prev = mesh.vertices.clone();
            for (v, nb) in mesh.vertices.iter_mut().zip(&adj) {
                if !nb.is_empty() {
                    let sum = nb.iter().fold(P3::origin().coords, |acc, &j| acc + prev[j].coords);
                    *v = P3::from(sum / nb.len() as f64);
                }
            }
            project(&mut mesh.vertices, index);
        }
    }
    if params.offset != 0.0 {
        let normals = mesh.area_weighted_vertex_normals();
        for (v, n) in mesh.vertices.iter_mut().zip(normals) {
            *v += n * params.offset;
        }
    }
}

/// Subdivided bounding box shrink-wrapped onto all structures.
pub fn generate_paper_mesh(
    structures: &[TriangleMesh],
    subdivision_level: u32,
    params: &WrapParams,
) -> Result<PaperMesh> {
    if structures.is_empty() {
        return Err(invalid("paper mesh needs at least one structure"));
    }
    let index = SurfaceIndex::new(structures)?;
    let mut mesh = subdivide(&box_mesh(&bounding_box(structures)?), subdivision_level);
    shrink_wrap(&mut mesh, &index, params);
    Ok(PaperMesh {
        mesh,
        subdivision_level,
        uv: None,
    })
}

/// Re-projects the paper mesh onto a single structure.
pub fn wrap_per_structure(
    paper: &PaperMesh,
    structure: &TriangleMesh,
    structure_index: usize,
    params: &WrapParams,
) -> Result<WrappedPaperMesh> {
    let index = SurfaceIndex::for_mesh(structure)?;
    let mut mesh = paper.mesh.clone();
    mesh.vertex_normals = None;
    shrink_wrap(&mut mesh, &index, params);
    Ok(WrappedPaperMesh {
        mesh,
        structure_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::icosphere;

    #[test]
    fn sphere_level_one_has_48_triangles_on_surface() {
        let s = icosphere(3, 1.0, P3::origin());
        let p = generate_paper_mesh(&[s], 1, &WrapParams::default()).unwrap();
        assert_eq!(p.mesh.triangle_count(), 48);
        assert!(p.mesh.validate().closed);
        for v in &p.mesh.vertices {
            let r = v.coords.norm();
            assert!(r > 0.98 && r <= 1.0 + 1e-12, "{r}");
        }
    }

    #[test]
    fn empty_structure_list_is_rejected() {
        assert!(generate_paper_mesh(&[], 1, &WrapParams::default()).is_err());
    }

    #[test]
    fn smoothing_keeps_topology_and_surface_contact() {
        let s = icosphere(2, 1.0, P3::new(0.2, 0.0, 0.0));
        let params = WrapParams {
            smoothing_iters: 3,
            offset: 0.0,
        };
        let p = generate_paper_mesh(std::slice::from_ref(&s), 2, &params).unwrap();
        assert_eq!(p.mesh.triangles, subdivide(&box_mesh(&bounding_box(&[s.clone()]).unwrap()), 2).triangles);
        let index = SurfaceIndex::for_mesh(&s).unwrap();
        for v in &p.mesh.vertices {
            assert!(index.closest(v).distance < 1e-9);
        }
    }

    #[test]
    fn concentric_wrap_lands_on_inner_sphere() {
        let outer = icosphere(3, 1.0, P3::origin());
        let inner = icosphere(3, 0.5, P3::origin());
        let p = generate_paper_mesh(&[outer], 1, &WrapParams::default()).unwrap();
        let w = wrap_per_structure(&p, &inner, 1, &WrapParams::default()).unwrap();
        assert_eq!(w.mesh.triangles, p.mesh.triangles);
        for v in &w.mesh.vertices {
            let r = v.coords.norm();
            assert!(r > 0.49 && r <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn offset_moves_outwards() {
        let s = icosphere(3, 1.0, P3::origin());
        let params = WrapParams {
            smoothing_iters: 0,
            offset: 0.1,
        };
        let p = generate_paper_mesh(&[s], 1, &params).unwrap();
        for v in &p.mesh.vertices {
            assert!(v.coords.norm() > 1.05);
        }
    }
}
