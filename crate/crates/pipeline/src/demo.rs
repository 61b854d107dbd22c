//! Procedural demo scenes: three nested spheres, a torso-like and a
//! pelvis-like arrangement. `write_demo` produces the OBJ files and a
//! project config per scene.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use chromafold_core::geom::{P3, V3};
use chromafold_core::mesh::{icosphere, save_mesh, TriangleMesh};

use crate::error::{io_at, Result};

pub struct DemoStructure {
    pub file: &'static str,
    pub hue: &'static str,
    pub mesh: TriangleMesh,
}

pub struct DemoScene {
    pub name: &'static str,
    pub structures: Vec<DemoStructure>,
    pub camera_position: [f64; 3],
    /// Extra `[render]` lines.
    pub render_extra: &'static str,
    pub comment: &'static str,
}

fn ellipsoid(level: u32, center: P3, radii: V3) -> TriangleMesh {
    let mut m = icosphere(level, 1.0, P3::origin());
    for v in m.vertices.iter_mut() {
        *v = center + v.coords.component_mul(&radii);
    }
    m
}

/// Icosphere whose radius varies smoothly with direction.
fn lumpy(level: u32, center: P3, radius: f64, amp: f64, freq: f64) -> TriangleMesh {
    let mut m = icosphere(level, 1.0, P3::origin());
    for v in m.vertices.iter_mut() {
        let d = v.coords;
        let k = 1.0 + amp * (freq * d.x).sin() * (freq * 0.7 * d.y + 0.4).cos();
        *v = center + d * (radius * k);
    }
    m
}

/// Closed torus around the y axis.
pub fn torus(center: P3, major: f64, minor: f64, rings: usize, sides: usize) -> TriangleMesh {
    let mut verts = Vec::with_capacity(rings * sides);
    for i in 0..rings {
        let u = TAU * i as f64 / rings as f64;
        for j in 0..sides {
            let v = TAU * j as f64 / sides as f64;
            let r = major + minor * v.cos();
            verts.push(center + V3::new(r * u.cos(), minor * v.sin(), r * u.sin()));
        }
    }
    let mut tris = Vec::with_capacity(2 * rings * sides);
    for i in 0..rings {
        let i1 = (i + 1) % rings;
        for j in 0..sides {
            let j1 = (j + 1) % sides;
            let (a, b, c, d) = (i * sides + j, i1 * sides + j, i1 * sides + j1, i * sides + j1);
            tris.push([a, c, b]);
            tris.push([a, d, c]);
        }
    }
    TriangleMesh::new(verts, tris).expect("torus indices are in range")
}

fn merge(parts: &[TriangleMesh]) -> TriangleMesh {
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    for p in parts {
        let base = verts.len();
        verts.extend_from_slice(&p.vertices);
        tris.extend(p.triangles.iter().map(|t| t.map(|i| i + base)));
    }
    TriangleMesh::new(verts, tris).expect("merged indices are in range")
}

pub fn concentric_spheres() -> DemoScene {
    DemoScene {
        name: "concentric_spheres",
        structures: vec![
            DemoStructure {
                file: "sphere_inner.obj",
                hue: "cyan",
                mesh: icosphere(4, 0.5, P3::origin()),
            },
            DemoStructure {
                file: "sphere_middle.obj",
                hue: "magenta",
                mesh: icosphere(4, 0.75, P3::origin()),
            },
            DemoStructure {
                file: "sphere_outer.obj",
                hue: "yellow",
                mesh: icosphere(4, 1.0, P3::origin()),
            },
        ],
        camera_position: [0.0, 0.0, 4.5],
        render_extra: "brighten_target = 1.0\nambient_floor = 1.0\n",
        comment: "# Flat hues and no brightening: each filter shows its matched\n\
                  # structure as a black silhouette on the pure filter color.\n",
    }
}

pub fn torso() -> DemoScene {
    DemoScene {
        name: "torso",
        structures: vec![
            DemoStructure {
                file: "torso_spine.obj",
                hue: "cyan",
                mesh: ellipsoid(3, P3::new(0.0, 0.0, -0.35), V3::new(0.12, 1.1, 0.12)),
            },
            DemoStructure {
                file: "torso_heart.obj",
                hue: "magenta",
                mesh: lumpy(3, P3::new(0.2, 0.35, 0.1), 0.28, 0.12, 4.0),
            },
            DemoStructure {
                file: "torso_body.obj",
                hue: "yellow",
                mesh: {
                    let mut m = ellipsoid(4, P3::origin(), V3::new(0.9, 1.4, 0.6));
                    for v in m.vertices.iter_mut() {
                        // narrower waist
                        let s = 1.0 - 0.15 * (-(v.y + 0.3).powi(2) * 4.0).exp();
                        v.x *= s;
                        v.z *= s;
                    }
                    m
                },
            },
        ],
        camera_position: [1.5, 0.8, 6.0],
        render_extra: "",
        comment: "",
    }
}

pub fn pelvis() -> DemoScene {
    DemoScene {
        name: "pelvis",
        structures: vec![
            DemoStructure {
                file: "pelvis_sacrum.obj",
                hue: "cyan",
                mesh: ellipsoid(3, P3::new(0.0, 0.25, -0.45), V3::new(0.3, 0.4, 0.15)),
            },
            DemoStructure {
                file: "pelvis_femoral_heads.obj",
                hue: "magenta",
                mesh: merge(&[
                    icosphere(3, 0.22, P3::new(-0.95, -0.45, 0.1)),
                    icosphere(3, 0.22, P3::new(0.95, -0.45, 0.1)),
                ]),
            },
            DemoStructure {
                file: "pelvis_girdle.obj",
                hue: "yellow",
                mesh: torus(P3::origin(), 0.8, 0.28, 64, 24),
            },
        ],
        camera_position: [0.0, 2.2, 4.2],
        render_extra: "",
        comment: "",
    }
}

pub fn scenes() -> Vec<DemoScene> {
    vec![concentric_spheres(), torso(), pelvis()]
}

impl DemoScene {
    pub fn config_text(&self) -> String {
        let mut s = format!("# {} demo\n{}seed = 1\n", self.name, self.comment);
        for st in &self.structures {
            s += &format!(
                "\n[[structures]]\npath = \"meshes/{}\"\nhue = \"{}\"\nopacity = 1.0\n",
                st.file, st.hue
            );
        }
        let [x, y, z] = self.camera_position;
        s += &format!(
            "\n[camera]\nposition = [{x:?}, {y:?}, {z:?}]\nlook_at = [0.0, 0.0, 0.0]\n\
             up = [0.0, 1.0, 0.0]\nvfov = 35.0\n"
        );
        s += &format!("\n[render]\nwidth = 512\nheight = 512\n{}", self.render_extra);
        s += "\n[papercraft]\nsubdivision_level = 1\nsmoothing_iters = 0\n\
              atlas_resolution = 1024\nwrap_offset = 0.0\n\n[papercraft.page]\n\
              width_mm = 210.0\nheight_mm = 297.0\nmargin_mm = 10.0\n";
        s
    }

    pub fn config_file(&self) -> String {
        format!("{}.toml", self.name)
    }
}

/// Writes `meshes/*.obj` and one config per scene into `dir`, returning the
/// config paths.
pub fn write_demo(dir: &Path) -> Result<Vec<PathBuf>> {
    let mesh_dir = dir.join("meshes");
    std::fs::create_dir_all(&mesh_dir).map_err(io_at(&mesh_dir))?;
    let mut configs = Vec::new();
    for scene in scenes() {
        for st in &scene.structures {
            let path = mesh_dir.join(st.file);
            let mut buf = Vec::new();
            save_mesh(&st.mesh, &mut buf)?;
            std::fs::write(&path, buf).map_err(io_at(&path))?;
        }
        let path = dir.join(scene.config_file());
        std::fs::write(&path, scene.config_text()).map_err(io_at(&path))?;
        configs.push(path);
    }
    Ok(configs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_meshes_are_closed() {
        for scene in scenes() {
            assert_eq!(scene.structures.len(), 3);
            for st in &scene.structures {
                let r = st.mesh.validate();
                assert!(r.closed, "{} is open", st.file);
            }
        }
    }

    #[test]
    fn torus_is_closed_and_oriented_outward() {
        let t = torus(P3::origin(), 1.0, 0.25, 64, 32);
        assert!(t.validate().closed);
        // divergence theorem: positive signed volume
        let vol: f64 = (0..t.triangle_count())
            .map(|i| {
                let [a, b, c] = t.corners(i);
                a.coords.dot(&b.coords.cross(&c.coords)) / 6.0
            })
            .sum();
        let exact = 2.0 * std::f64::consts::PI.powi(2) * 1.0 * 0.25f64.powi(2);
        assert!(vol > 0.0 && (vol - exact).abs() / exact < 0.05, "{vol} vs {exact}");
    }

    #[test]
    fn configs_parse() {
        for scene in scenes() {
            let cfg = crate::config::ProjectConfig::parse(&scene.config_text()).unwrap();
            cfg.validate_values().unwrap();
            assert_eq!(cfg.structures.len(), 3);
        }
    }
}
