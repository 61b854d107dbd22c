//! Wavefront OBJ subset: `v`, `vn` and `f` records.

use std::io::{BufRead, Write};

use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::geom::{P3, V3};

/// Records that are valid OBJ but carry nothing we use.
const IGNORED: &[&str] = &["vt", "vp", "o", "g", "s", "usemtl", "mtllib", "l", "p"];

/// Parses an OBJ stream. Polygons are fan-triangulated and degenerate
/// triangles are dropped (see [`load_mesh_with_report`] for the count).
pub fn load_mesh<R: BufRead>(reader: R) -> Result<TriangleMesh> {
    load_mesh_with_report(reader).map(|(m, _)| m)
}

pub fn load_mesh_with_report<R: BufRead>(reader: R) -> Result<(TriangleMesh, usize)> {
    let mut positions: Vec<P3> = Vec::new();
    let mut normals: Vec<V3> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut vertex_normal: Vec<Option<usize>> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let keyword = fields.next().unwrap();
        let err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        match keyword {
            "v" => {
                let xyz = parse_floats(fields, 3).map_err(err)?;
                positions.push(P3::new(xyz[0], xyz[1], xyz[2]));
                vertex_normal.push(None);
            }
            "vn" => {
                let xyz = parse_floats(fields, 3).map_err(err)?;
                normals.push(V3::new(xyz[0], xyz[1], xyz[2]));
            }
            "f" => {
                let mut corners = Vec::with_capacity(4);
                for token in fields {
                    let (v, n) = parse_face_corner(token, positions.len(), normals.len())
                        .map_err(&err)?;
                    if let Some(n) = n {
                        vertex_normal[v].get_or_insert(n);
                    }
                    corners.push(v);
                }
                if corners.len() < 3 {
                    return Err(err(format!(
                        "face needs at least 3 vertices, got {}",
                        corners.len()
                    )));
                }
                for k in 1..corners.len() - 1 {
                    triangles.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            k if IGNORED.contains(&k) => {}
            other => return Err(err(format!("unsupported record `{other}`"))),
        }
    }

    if triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut mesh = TriangleMesh::new(positions, triangles)?;
    if !vertex_normal.is_empty() && vertex_normal.iter().all(Option::is_some) {
        mesh.vertex_normals = Some(
            vertex_normal
                .iter()
                .map(|n| {
                    let v = normals[n.unwrap()];
                    let len = v.norm();
                    if len > 0.0 {
                        v / len
                    } else {
                        v
                    }
                })
                .collect(),
        );
    }
    let dropped = mesh.drop_degenerate();
    if dropped > 0 {
        log::warn!("dropped {dropped} degenerate triangles on load");
    }
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    Ok((mesh, dropped))
}

fn parse_floats<'a>(
    fields: impl Iterator<Item = &'a str>,
    count: usize,
) -> std::result::Result<Vec<f64>, String> {
    let vals: Vec<&str> = fields.collect();
    if vals.len() < count {
        return Err(format!("expected {count} numbers, got {}", vals.len()));
    }
    vals[..count]
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("invalid number `{s}`"))
        })
        .collect()
}

fn resolve_index(raw: &str, count: usize, what: &str) -> std::result::Result<usize, String> {
    let i: i64 = raw
        .parse()
        .map_err(|_| format!("invalid {what} index `{raw}`"))?;
    let resolved = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        return Err(format!("{what} index 0 is not valid"));
    };
    if resolved < 0 || resolved >= count as i64 {
        return Err(format!(
            "{what} index {i} out of range ({count} defined so far)"
        ));
    }
    Ok(resolved as usize)
}

fn parse_face_corner(
    token: &str,
    n_vertices: usize,
    n_normals: usize,
) -> std::result::Result<(usize, Option<usize>), String> {
    let mut parts = token.split('/');
    let v = resolve_index(parts.next().unwrap_or(""), n_vertices, "vertex")?;
    let _texcoord = parts.next();
    let n = match parts.next() {
        Some(s) if !s.is_empty() => Some(resolve_index(s, n_normals, "normal")?),
        _ => None,
    };
    Ok((v, n))
}

/// Writes the mesh as OBJ with 6 significant digits per coordinate.
pub fn save_mesh<W: Write>(mesh: &TriangleMesh, mut w: W) -> Result<()> {
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", format_g6(v.x), format_g6(v.y), format_g6(v.z))?;
    }
    if let Some(normals) = &mesh.vertex_normals {
        for n in normals {
            writeln!(w, "vn {} {} {}", format_g6(n.x), format_g6(n.y), format_g6(n.z))?;
        }
        for t in &mesh.triangles {
            writeln!(
                w,
                "f {0}//{0} {1}//{1} {2}//{2}",
                t[0] + 1,
                t[1] + 1,
                t[2] + 1
            )?;
        }
    } else {
        for t in &mesh.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
    }
    Ok(())
}

/// `%g`-style formatting with 6 significant digits.
pub fn format_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
