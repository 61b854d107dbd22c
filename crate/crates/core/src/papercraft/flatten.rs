use std::collections::BTreeSet;

use super::paper::PaperMesh;
use crate::error::{invalid, Error, Result};
use crate::geom::{triangle_cross, P3, V3};
use crate::mesh::TriangleMesh;

/// Triangles to press onto their mean plane.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlattenSelection {
    pub triangles: BTreeSet<usize>,
}

impl FlattenSelection {
    pub fn new(ids: impl IntoIterator<Item = usize>) -> Self {
        FlattenSelection {
            triangles: ids.into_iter().collect(),
        }
    }
}

fn is_connected(mesh: &TriangleMesh, sel: &BTreeSet<usize>) -> bool {
    let topo = mesh.topology();
    let first = *sel.iter().next().unwrap();
    let mut seen = BTreeSet::from([first]);
    let mut stack = vec![first];
    while let Some(t) = stack.pop() {
        for n in topo.face_neighbors(t) {
            if sel.contains(&n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen.len() == sel.len()
}

/// Projects the distinct vertices of the selected triangles onto the plane
/// through their centroid whose normal is the sum of their vertex normals.
pub fn flatten_mesh(mesh: &TriangleMesh, selection: &FlattenSelection) -> Result<TriangleMesh> {
    if selection.triangles.is_empty() {
        return Err(invalid("empty flatten selection"));
    }
    if let Some(&bad) = selection
        .triangles
        .iter()
        .find(|&&t| t >= mesh.triangle_count())
    {
        return Err(invalid(format!(
            "triangle {bad} out of range ({} triangles)",
            mesh.triangle_count()
        )));
    }
    if !is_connected(mesh, &selection.triangles) {
        log::warn!("flatten selection is not a connected patch");
    }
    let verts: BTreeSet<usize> = selection
        .triangles
        .iter()
        .flat_map(|&t| mesh.triangles[t])
        .collect();
    // vertex normals from the selected triangles only, so a flat patch keeps its plane
    let mut acc = vec![V3::zeros(); mesh.vertices.len()];
    for &t in &selection.triangles {
        let [a, b, c] = mesh.corners(t);
        let n = triangle_cross(&a, &b, &c);
        for v in mesh.triangles[t] {
            acc[v] += n;
        }
    }
    let sum: V3 = verts
        .iter()
        .map(|&v| acc[v].try_normalize(0.0).unwrap_or_else(V3::zeros))
        .sum();
    let len = sum.norm();
    if len <= 1e-12 * verts.len() as f64 {
        return Err(Error::DegenerateSelection(
            "the selected vertex normals cancel out".into(),
        ));
    }
    let n = sum / len;
    let origin = P3::from(
        verts.iter().map(|&v| mesh.vertices[v].coords).sum::<V3>() / verts.len() as f64,
    );
    let mut out = mesh.clone();
    for &v in &verts {
        let p = mesh.vertices[v];
        out.vertices[v] = p - n * (p - origin).dot(&n);
    }
    Ok(out)
}

pub fn flatten_selection(paper: &PaperMesh, selection: &FlattenSelection) -> Result<PaperMesh> {
    Ok(PaperMesh {
        mesh: flatten_mesh(&paper.mesh, selection)?,
        subdivision_level: paper.subdivision_level,
        uv: paper.uv.clone(),
    })
}
