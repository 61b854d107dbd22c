//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use chromafold::stages::{colorize, load_meshes, render_images_2d, render_options};
use chromafold::ProjectConfig;
use chromafold_core::color::{composite, ColorRgb, FilterKind, Hue};
use chromafold_core::geom::{triangles_interiors_overlap, P3, V3};
use chromafold_core::mesh::{box_mesh, subdivide, tetrahedron, uv_sphere, Aabb, TriangleMesh};
use chromafold_core::papercraft::*;
use chromafold_core::render::{
    composite_fragments, depth_peel, fragment_sort_reference, render_structure_layer, Camera,
    RenderOptions,
};
use chromafold_core::scene::Structure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let mut outcome = f();
        let took = start.elapsed();
        if let (Ok(detail), Some(limit)) = (&outcome, budget) {
            if took > limit {
                outcome = Err(format!("{detail}; took {took:.2?}, limit {limit:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                self.failed += 1;
                println!("FAIL  {name}: {why} [{took:.2?}]");
            }
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn demo_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo")
}

const DEMOS: [&str; 3] = ["concentric_spheres", "torso", "pelvis"];

fn demo_config(name: &str) -> Result<ProjectConfig, String> {
    ProjectConfig::load(&demo_dir().join(format!("{name}.toml"))).map_err(|e| e.to_string())
}

fn color_algebra() -> Outcome {
    let [c, m, y] = Hue::ALL.map(Hue::color);
    let cases = [
        ("C*M", composite(&[c, m]), ColorRgb::new(0.0, 0.0, 1.0)),
        ("C*Y", composite(&[c, y]), ColorRgb::new(0.0, 1.0, 0.0)),
        ("M*Y", composite(&[m, y]), ColorRgb::new(1.0, 0.0, 0.0)),
        ("C*M*Y", composite(&[c, m, y]), ColorRgb::new(0.0, 0.0, 0.0)),
    ];
    for (name, got, want) in cases {
        ensure(got == want, || format!("{name} = {got:?}, expected {want:?}"))?;
    }
    Ok("3 pairs and the triple exact".into())
}

fn filter_isolation() -> Outcome {
    let cfg = demo_config("concentric_spheres")?;
    ensure((cfg.render.width, cfg.render.height) == (512, 512), || {
        "bundled config is not 512x512".into()
    })?;
    let structures = colorize(&cfg, &load_meshes(&cfg).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let images = render_images_2d(&cfg, &structures).map_err(|e| e.to_string())?;
    let camera = cfg.camera().map_err(|e| e.to_string())?;
    let layers: Vec<_> = structures
        .iter()
        .enumerate()
        .map(|(i, s)| render_structure_layer(s, i, &camera, &render_options(&cfg)))
        .collect();
    let mut summary = Vec::new();
    for (fi, filter) in FilterKind::ALL.into_iter().enumerate() {
        let hue = filter.matched_hue();
        let k = structures
            .iter()
            .position(|s| s.hue == hue)
            .ok_or_else(|| format!("no {} structure", hue.name()))?;
        let pass = filter.pass_channel();
        let img = &images.filtered[fi];
        let (mut dark, mut bright) = (0, 0);
        for (p, px) in img.pixels.iter().enumerate() {
            if layers[k].alpha[p] > 0.0 {
                ensure(px.channel(pass) == 0.0, || {
                    format!("{} filter: pixel {p} under {} has {:?}", filter.name(), hue.name(), px)
                })?;
                dark += 1;
            } else if layers.iter().any(|l| l.alpha[p] > 0.0) {
                ensure(px.max_abs_diff(&filter.color()) <= 2.0 / 255.0, || {
                    format!("{} filter: pixel {p} off the filter color: {px:?}", filter.name())
                })?;
                bright += 1;
            }
        }
        ensure(dark > 0, || format!("{} structure not visible", hue.name()))?;
        summary.push(format!("{}: {dark} dark, {bright} clear", filter.name()));
    }
    Ok(summary.join("; "))
}

/// How far the default shading and brightening sit from pure filter colors.
fn filter_isolation_defaults_info() {
    let Ok(mut cfg) = demo_config("concentric_spheres") else {
        return;
    };
    let defaults = RenderOptions::default();
    cfg.render.ambient_floor = defaults.ambient_floor;
    cfg.render.brighten_target = 0.9;
    let Ok(structures) = load_meshes(&cfg).and_then(|m| colorize(&cfg, &m)) else {
        return;
    };
    let Ok(images) = render_images_2d(&cfg, &structures) else {
        return;
    };
    let cyan = render_structure_layer(&structures[0], 0, &cfg.camera().unwrap(), &render_options(&cfg));
    let max_r = images.filtered[0]
        .pixels
        .iter()
        .zip(&cyan.alpha)
        .filter(|(_, a)| **a > 0.0)
        .map(|(c, _)| c.r)
        .fold(0.0, f64::max);
    println!(
        "INFO  filter isolation with ambient {} and brighten 0.9: max red under cyan {max_r:.3}",
        defaults.ambient_floor
    );
}

fn random_scene(rng: &mut ChaCha8Rng, seed: u64) -> Vec<Structure> {
    let n_struct = rng.gen_range(1..=3);
    let n_tris = rng.gen_range(1..=10);
    let mut per: Vec<Vec<[P3; 3]>> = vec![Vec::new(); n_struct];
    for i in 0..n_tris {
        let mut p = || {
            P3::new(
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.0..1.0),
            )
        };
        per[i % n_struct].push([p(), p(), p()]);
    }
    per.into_iter()
        .enumerate()
        .filter(|(_, t)| !t.is_empty())
        .map(|(s, tris)| {
            let verts: Vec<P3> = tris.iter().flatten().copied().collect();
            let idx = (0..tris.len()).map(|i| [3 * i, 3 * i + 1, 3 * i + 2]).collect();
            let mesh = TriangleMesh::new(verts, idx).unwrap();
            let opacity = [1.0, 0.6, 0.3, 0.85][(seed as usize + s) % 4];
            Structure::new(format!("s{s}"), mesh, Hue::ALL[s], opacity).unwrap()
        })
        .collect()
}

fn depth_peel_matches_sorting() -> Outcome {
    let opts = RenderOptions::default();
    let cam = Camera::perspective(P3::new(0.2, 0.3, 4.0), P3::origin(), V3::y(), 50.0, 0.5, 20.0, 64, 64)
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut max_layers = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let scene = random_scene(&mut rng, seed);
        let peeled = depth_peel(&scene, &cam, &opts);
        let sorted = fragment_sort_reference(&scene, &cam, &opts);
        max_layers = max_layers.max(peeled.passes);
        let a = composite_fragments(&peeled, ColorRgb::WHITE).map_err(|e| e.to_string())?;
        let b = composite_fragments(&sorted, ColorRgb::WHITE).map_err(|e| e.to_string())?;
        let err = a
            .pixels
            .iter()
            .zip(&b.pixels)
            .map(|(x, y)| x.max_abs_diff(y))
            .fold(0.0, f64::max);
        ensure(err <= 1.0 / 255.0, || format!("seed {seed}: max channel error {err}"))?;
        worst = worst.max(err);
    }
    Ok(format!("100 scenes, max error {worst:.2e}, up to {max_layers} layers"))
}

fn paper_mesh_count() -> Outcome {
    let mut counts = Vec::new();
    for name in DEMOS {
        let cfg = demo_config(name)?;
        let meshes = load_meshes(&cfg).map_err(|e| e.to_string())?;
        let p = generate_paper_mesh(&meshes, 1, &WrapParams::default()).map_err(|e| e.to_string())?;
        ensure(p.mesh.triangle_count() == 48, || {
            format!("{name}: {} triangles", p.mesh.triangle_count())
        })?;
        counts.push(format!("{name} 48"));
    }
    let p = generate_paper_mesh(&[tetrahedron()], 1, &WrapParams::default()).map_err(|e| e.to_string())?;
    ensure(p.mesh.triangle_count() == 48, || "tetrahedron input".into())?;
    counts.push("tetrahedron 48".into());
    Ok(counts.join(", "))
}

/// Largest relative edge length error and number of overlapping pairs.
fn net_errors(mesh: &TriangleMesh, l: &PlanarLayout) -> (f64, usize) {
    let mut iso: f64 = 0.0;
    for t in 0..mesh.triangle_count() {
        let c = mesh.corners(t);
        let p = l.positions[t];
        for i in 0..3 {
            let l3 = (c[(i + 1) % 3] - c[i]).norm();
            let l2 = (p[(i + 1) % 3] - p[i]).norm();
            iso = iso.max((l2 - l3).abs() / l3);
        }
    }
    let mut overlaps = 0;
    for isl in &l.islands {
        for (i, &a) in isl.triangles.iter().enumerate() {
            for &b in &isl.triangles[..i] {
                if triangles_interiors_overlap(&l.positions[a], &l.positions[b]) {
                    overlaps += 1;
                }
            }
        }
    }
    (iso, overlaps)
}

fn unfold_validity() -> Outcome {
    let mut parts = Vec::new();
    for name in DEMOS {
        let cfg = demo_config(name)?;
        let meshes = load_meshes(&cfg).map_err(|e| e.to_string())?;
        let p = generate_paper_mesh(&meshes, 1, &WrapParams::default()).map_err(|e| e.to_string())?;
        let l = unfold(
            &p.mesh,
            &UnfoldOptions {
                seed: cfg.seed,
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let (iso, overlaps) = net_errors(&p.mesh, &l);
        ensure(iso <= 1e-6, || format!("{name}: isometry error {iso:.2e}"))?;
        ensure(overlaps == 0, || format!("{name}: {overlaps} overlapping pairs"))?;
        parts.push(format!("{name} {} island(s) iso {iso:.1e}", l.islands.len()));
    }

    let tet = tetrahedron();
    let edge = (tet.vertices[1] - tet.vertices[0]).norm();
    let l = unfold(&tet, &UnfoldOptions::default()).map_err(|e| e.to_string())?;
    let (iso, overlaps) = net_errors(&tet, &l);
    let unit_tri = 3f64.sqrt() / 4.0 * edge * edge;
    ensure(iso <= 1e-6 && overlaps == 0 && l.islands.len() == 1, || {
        format!("tetrahedron net: iso {iso:.2e}, {overlaps} overlaps, {} islands", l.islands.len())
    })?;
    ensure((l.layout_area() - 4.0 * unit_tri).abs() <= 1e-12 * unit_tri, || {
        format!("tetrahedron net area {} vs {}", l.layout_area(), 4.0 * unit_tri)
    })?;
    ensure(l.fold_count() == 3 && l.cut_count() == 3, || "tetrahedron fold/cut counts".into())?;

    let cube = box_mesh(&Aabb::new(P3::origin(), P3::new(1.0, 1.0, 1.0)).unwrap());
    let l = unfold(&cube, &UnfoldOptions::default()).map_err(|e| e.to_string())?;
    let (iso, overlaps) = net_errors(&cube, &l);
    ensure(iso <= 1e-6 && overlaps == 0, || format!("cube net: iso {iso:.2e}, {overlaps} overlaps"))?;
    ensure((l.layout_area() - 6.0).abs() <= 1e-12, || format!("cube net area {}", l.layout_area()))?;
    parts.push("tetrahedron 4 triangles, cube area 6".into());
    Ok(parts.join("; "))
}

fn mean_plane_flattening() -> Outcome {
    let m = subdivide(
        &box_mesh(&Aabb::new(P3::new(-1.0, -2.0, 0.5), P3::new(3.0, 1.0, 2.0)).unwrap()),
        2,
    );
    let tol = 1e-12 * m.bbox_diagonal();
    let n0 = m.face_normal(0);
    let face: Vec<usize> = (0..m.triangle_count())
        .filter(|&t| (m.face_normal(t) - n0).norm() < 1e-12)
        .collect();
    let out = flatten_mesh(&m, &FlattenSelection::new(face.iter().copied())).map_err(|e| e.to_string())?;
    let moved = m
        .vertices
        .iter()
        .zip(&out.vertices)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    ensure(moved <= tol, || format!("coplanar patch moved by {moved:.2e}"))?;

    // unit right triangles facing +z and +x
    let verts = vec![
        P3::new(0.0, 0.0, 0.0),
        P3::new(1.0, 0.0, 0.0),
        P3::new(0.0, 1.0, 0.0),
        P3::new(2.0, 0.0, 0.0),
        P3::new(2.0, 1.0, 0.0),
        P3::new(2.0, 0.0, 1.0),
    ];
    let two = TriangleMesh::new(verts, vec![[0, 1, 2], [3, 4, 5]]).unwrap();
    let flat = flatten_mesh(&two, &FlattenSelection::new([0, 1])).map_err(|e| e.to_string())?;
    let n = V3::new(1.0, 0.0, 1.0) / 2f64.sqrt();
    let centroid = two.vertices.iter().map(|v| v.coords).sum::<V3>() / 6.0;
    let mut worst: f64 = 0.0;
    for (a, b) in two.vertices.iter().zip(&flat.vertices) {
        worst = worst.max((b.coords - centroid).dot(&n).abs());
        worst = worst.max((b - a).cross(&n).norm());
    }
    ensure(worst <= 1e-12, || format!("plane (1,0,1)/sqrt2 off by {worst:.2e}"))?;
    Ok(format!("{} coplanar triangles fixed ({moved:.1e}), two-triangle plane exact", face.len()))
}

fn flat_projection() -> ProjectionOptions {
    ProjectionOptions {
        render: RenderOptions {
            ambient_floor: 1.0,
            ..Default::default()
        },
        ..Default::default()
    }
}

/// Texel indices whose centre is at least one texel inside a UV triangle.
fn interior_texels(atlas: &TextureAtlas) -> Vec<usize> {
    let res = atlas.resolution as f64;
    let mut out = Vec::new();
    for uv in &atlas.mapping {
        let s = uv.map(|p| chromafold_core::geom::P2::new(p.x * res, p.y * res));
        let area2 = (s[1] - s[0]).perp(&(s[2] - s[0]));
        if area2.abs() <= 1e-12 {
            continue;
        }
        let lo = s[0].inf(&s[1]).inf(&s[2]);
        let hi = s[0].sup(&s[1]).sup(&s[2]);
        for y in lo.y.floor() as usize..hi.y.ceil() as usize {
            for x in lo.x.floor() as usize..hi.x.ceil() as usize {
                let c = chromafold_core::geom::P2::new(x as f64 + 0.5, y as f64 + 0.5);
                let inside = (0..3).all(|i| {
                    let (a, b) = (s[i], s[(i + 1) % 3]);
                    area2.signum() * (b - a).perp(&(c - a)) / (b - a).norm() >= 1.0
                });
                if inside {
                    out.push(y * atlas.resolution + x);
                }
            }
        }
    }
    out
}

fn texture_pipeline() -> Outcome {
    let cfg = demo_config("torso")?;
    let meshes = load_meshes(&cfg).map_err(|e| e.to_string())?;
    let res = cfg.papercraft.atlas_resolution;
    let p = generate_paper_mesh(&meshes, 1, &WrapParams::default()).map_err(|e| e.to_string())?;
    let l = unfold(&p.mesh, &UnfoldOptions::default()).map_err(|e| e.to_string())?;
    let paper = assign_uv(&p, &l, res).map_err(|e| e.to_string())?;
    // each hue painted onto a structure that is the paper surface itself
    let w = wrap_per_structure(&paper, &paper.mesh, 0, &WrapParams::default()).map_err(|e| e.to_string())?;
    let mut atlases = Vec::new();
    let mut checked = 0;
    for hue in Hue::ALL {
        let st = Structure::opaque(hue.name(), w.mesh.clone(), hue);
        let atlas = project_texture(&w, &st, &paper, res, &flat_projection()).map_err(|e| e.to_string())?;
        let interior = interior_texels(&atlas);
        for &t in &interior {
            let c = atlas.image.pixels[t];
            ensure(c.max_abs_diff(&hue.color()) <= 2.0 / 255.0, || {
                format!("{} atlas texel {t} is {c:?}", hue.name())
            })?;
        }
        checked = interior.len();
        atlases.push(atlas);
    }
    let combined = combine_textures(&atlases, 0.9).map_err(|e| e.to_string())?;
    let black = ColorRgb::new(0.1, 0.1, 0.1);
    let mut worst: f64 = 0.0;
    for t in interior_texels(&combined) {
        worst = worst.max(combined.image.pixels[t].max_abs_diff(&black));
    }
    ensure(worst <= 1e-9, || format!("combined atlas off (0.1,0.1,0.1) by {worst:.2e}"))?;
    Ok(format!("{checked} interior texels per hue at {res}, combined within {worst:.1e}"))
}

fn performance_envelope() -> Outcome {
    let meshes = [
        uv_sphere(1.0, P3::new(0.0, 0.0, 0.0), 100, 250),
        uv_sphere(0.6, P3::new(0.9, 0.4, 0.2), 100, 250),
        uv_sphere(0.5, P3::new(-0.8, -0.3, 0.4), 100, 250),
    ];
    let counts: Vec<usize> = meshes.iter().map(|m| m.triangle_count()).collect();
    ensure(counts.iter().all(|&c| c <= 50_000), || format!("{counts:?}"))?;
    let structures: Vec<Structure> = meshes
        .iter()
        .zip(Hue::ALL)
        .map(|(m, h)| Structure::opaque(h.name(), m.clone(), h))
        .collect();
    let res = 2048;
    let start = Instant::now();
    let p = generate_paper_mesh(&meshes, 1, &WrapParams::default()).map_err(|e| e.to_string())?;
    let l = unfold(&p.mesh, &UnfoldOptions::default()).map_err(|e| e.to_string())?;
    let unfold_time = start.elapsed();
    let paper = assign_uv(&p, &l, res).map_err(|e| e.to_string())?;
    let atlases = structures
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let w = wrap_per_structure(&paper, &s.mesh, i, &WrapParams::default())?;
            project_texture(&w, s, &paper, res, &ProjectionOptions::default())
        })
        .collect::<chromafold_core::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    combine_textures(&atlases, 0.9).map_err(|e| e.to_string())?;
    let total = start.elapsed();
    Ok(format!(
        "{counts:?} triangles, unfold {unfold_time:.2?}, projection {:.2?} at {res}",
        total - unfold_time
    ))
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut n = 0;
    for name in DEMOS {
        let config = demo_dir().join(format!("{name}.toml"));
        for cmd in ["render2d", "render3d"] {
            let mut runs = Vec::new();
            for run in 0..2 {
                let out = tmp.path().join(format!("{name}_{cmd}_{run}"));
                let status = Command::new(env!("CARGO_BIN_EXE_chromafold"))
                    .arg(cmd)
                    .arg(&config)
                    .arg("--out")
                    .arg(&out)
                    .env("RUST_LOG", "warn")
                    .output()
                    .map_err(|e| e.to_string())?;
                ensure(status.status.success(), || {
                    format!("{cmd} {name}: {}", String::from_utf8_lossy(&status.stderr))
                })?;
                runs.push(read_dir_bytes(&out));
            }
            ensure(!runs[0].is_empty() && runs[0] == runs[1], || format!("{cmd} {name} differs"))?;
            n += runs[0].len();
        }
    }
    Ok(format!("{n} files byte-identical across two runs"))
}

fn main() {
    let mut report = Report { failed: 0 };
    let secs = Duration::from_secs;
    report.check("color algebra", None, color_algebra);
    report.check("filter isolation (2D)", Some(secs(10)), filter_isolation);
    filter_isolation_defaults_info();
    report.check("depth peeling vs fragment sort", Some(secs(60)), depth_peel_matches_sorting);
    report.check("paper mesh triangle count", None, paper_mesh_count);
    report.check("unfold validity", Some(secs(30)), unfold_validity);
    report.check("mean-plane flattening", None, mean_plane_flattening);
    report.check("texture pipeline", Some(secs(60)), texture_pipeline);
    report.check("performance envelope", Some(secs(120)), performance_envelope);
    report.check("determinism", None, determinism);
    if report.failed > 0 {
        println!("{} acceptance check(s) failed", report.failed);
        std::process::exit(1);
    }
    println!("all acceptance checks passed");
}
