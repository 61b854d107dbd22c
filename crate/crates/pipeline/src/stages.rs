//! The four workflow stages: load and simplify meshes, map structures to
//! hues, build the paper net and atlas, and render the outputs.

use std::fs::File;
use std::io::{BufReader, Cursor, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chromafold_core::color::FilterKind;
use chromafold_core::image::{filter_image, CompositeImage};
use chromafold_core::mesh::{decimate, load_mesh, TriangleMesh};
use chromafold_core::papercraft::{
    assembly_text, assign_uv, combine_textures, flatten_mesh, generate_paper_mesh,
    layout_to_print_sheet, project_texture, unfold, wrap_per_structure, FlattenSelection,
    PaperMesh, PlanarLayout, ProjectionOptions, TextureAtlas, UnfoldOptions, WrapParams,
};
use chromafold_core::render::{render_2d, render_textured, RenderOptions};
use chromafold_core::scene::Structure;
use zip::write::SimpleFileOptions;

use crate::config::ProjectConfig;
use crate::error::{io_at, PipelineError, Result};

pub const COMPOSITE_PNG: &str = "composite.png";
pub const SHEET_SVG: &str = "papercraft.svg";
pub const ATLAS_PNG: &str = "atlas.png";
pub const FOLDED_PNG: &str = "preview_folded.png";
pub const ASSEMBLY_TXT: &str = "assembly.txt";

pub fn filtered_name(filter: FilterKind) -> &'static str {
    match filter {
        FilterKind::Red => "filtered_red.png",
        FilterKind::Green => "filtered_green.png",
        FilterKind::Blue => "filtered_blue.png",
    }
}

/// Reads one structure and decimates it down to its triangle budget.
pub fn load_structure_mesh(path: &Path, decimate_target: usize) -> Result<TriangleMesh> {
    let file = File::open(path).map_err(io_at(path))?;
    let mesh = load_mesh(BufReader::new(file)).map_err(|source| PipelineError::Mesh {
        path: path.to_path_buf(),
        source,
    })?;
    if mesh.triangle_count() <= decimate_target {
        return Ok(mesh);
    }
    log::info!(
        "decimating {} from {} to {} triangles",
        path.display(),
        mesh.triangle_count(),
        decimate_target
    );
    decimate(&mesh, decimate_target).map_err(|source| PipelineError::Mesh {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_meshes(cfg: &ProjectConfig) -> Result<Vec<TriangleMesh>> {
    cfg.structures
        .iter()
        .map(|s| load_structure_mesh(&s.path, s.decimate_target))
        .collect()
}

/// Assigns each mesh its configured hue and opacity.
pub fn colorize(cfg: &ProjectConfig, meshes: &[TriangleMesh]) -> Result<Vec<Structure>> {
    cfg.structures
        .iter()
        .zip(meshes)
        .map(|(s, m)| {
            let name = s
                .path
                .file_stem()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(Structure::new(name, m.clone(), s.hue.into(), s.opacity)?)
        })
        .collect()
}

pub fn render_options(cfg: &ProjectConfig) -> RenderOptions {
    RenderOptions {
        ambient_floor: cfg.render.ambient_floor,
        ..Default::default()
    }
}

pub struct Images2d {
    pub composite: CompositeImage,
    /// Red, green and blue filtered views, in that order.
    pub filtered: [CompositeImage; 3],
}

pub fn render_images_2d(cfg: &ProjectConfig, structures: &[Structure]) -> Result<Images2d> {
    let camera = cfg.camera()?;
    let composite = render_2d(
        structures,
        &camera,
        cfg.render.brighten_target,
        &render_options(cfg),
    )?;
    let filtered = FilterKind::ALL.map(|f| filter_image(&composite, f));
    Ok(Images2d {
        composite,
        filtered,
    })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(io_at(&path))?;
    Ok(path)
}

impl Images2d {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(io_at(dir))?;
        let mut out = vec![write_file(dir, COMPOSITE_PNG, &self.composite.png_bytes()?)?];
        for (f, img) in FilterKind::ALL.iter().zip(&self.filtered) {
            out.push(write_file(dir, filtered_name(*f), &img.png_bytes()?)?);
        }
        Ok(out)
    }
}

pub fn run_2d(cfg: &ProjectConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let structures = colorize(cfg, &load_meshes(cfg)?)?;
    render_images_2d(cfg, &structures)?.write(out_dir)
}

/// Paper mesh with UVs and its net. Depends only on the geometry, the
/// papercraft settings and the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct PaperStage {
    pub paper: PaperMesh,
    pub layout: PlanarLayout,
}

fn wrap_params(cfg: &ProjectConfig) -> WrapParams {
    WrapParams {
        smoothing_iters: cfg.papercraft.smoothing_iters,
        offset: cfg.papercraft.wrap_offset,
    }
}

pub fn build_paper_stage(cfg: &ProjectConfig, meshes: &[TriangleMesh]) -> Result<PaperStage> {
    let p = &cfg.papercraft;
    let paper = generate_paper_mesh(meshes, p.subdivision_level, &wrap_params(cfg))?;
    let layout = unfold(
        &paper.mesh,
        &UnfoldOptions {
            seed: cfg.seed,
            mm_per_unit: p.page.mm_per_unit,
            ..Default::default()
        },
    )?;
    log::info!(
        "net: {} triangles in {} island(s), attempt {}",
        layout.triangle_count(),
        layout.islands.len(),
        layout.attempt
    );
    let paper = assign_uv(&paper, &layout, p.atlas_resolution)?;
    Ok(PaperStage { paper, layout })
}

/// Per-structure projection geometry: the paper mesh wrapped onto each
/// structure, with the flatten history pressed into every copy.
pub fn wrapped_meshes(
    cfg: &ProjectConfig,
    meshes: &[TriangleMesh],
    stage: &PaperStage,
    history: &[FlattenSelection],
) -> Result<Vec<chromafold_core::papercraft::WrappedPaperMesh>> {
    meshes
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut w = wrap_per_structure(&stage.paper, m, i, &wrap_params(cfg))?;
            for sel in history {
                w.mesh = flatten_mesh(&w.mesh, sel)?;
            }
            Ok(w)
        })
        .collect()
}

pub fn project_atlas(
    cfg: &ProjectConfig,
    structures: &[Structure],
    stage: &PaperStage,
    history: &[FlattenSelection],
) -> Result<TextureAtlas> {
    let meshes: Vec<TriangleMesh> = structures.iter().map(|s| s.mesh.clone()).collect();
    let wrapped = wrapped_meshes(cfg, &meshes, stage, history)?;
    let opts = ProjectionOptions {
        render: render_options(cfg),
        ..Default::default()
    };
    let atlases = wrapped
        .iter()
        .zip(structures)
        .map(|(w, s)| project_texture(w, s, &stage.paper, cfg.papercraft.atlas_resolution, &opts))
        .collect::<chromafold_core::Result<Vec<_>>>()?;
    Ok(combine_textures(&atlases, cfg.render.brighten_target)?)
}

/// The textured paper mesh seen through the scene camera.
pub fn render_folded(
    cfg: &ProjectConfig,
    stage: &PaperStage,
    atlas: &TextureAtlas,
) -> Result<CompositeImage> {
    Ok(render_textured(
        &stage.paper.mesh,
        &atlas.mapping,
        &atlas.image,
        &cfg.camera()?,
        &render_options(cfg),
    )?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts3d {
    pub svg: String,
    pub atlas: CompositeImage,
    pub folded: CompositeImage,
    pub assembly: String,
    /// Millimetres per model unit on the sheet.
    pub sheet_scale: f64,
}

pub fn present_3d(
    cfg: &ProjectConfig,
    stage: &PaperStage,
    atlas: &TextureAtlas,
) -> Result<Artifacts3d> {
    let sheet = layout_to_print_sheet(&stage.layout, atlas, &cfg.papercraft.page.spec())?;
    Ok(Artifacts3d {
        svg: sheet.svg,
        atlas: atlas.image.clone(),
        folded: render_folded(cfg, stage, atlas)?,
        assembly: assembly_text(&stage.layout),
        sheet_scale: sheet.scale,
    })
}

impl Artifacts3d {
    pub fn files(&self) -> Result<Vec<(&'static str, Vec<u8>)>> {
        Ok(vec![
            (SHEET_SVG, self.svg.as_bytes().to_vec()),
            (ATLAS_PNG, self.atlas.png_bytes()?),
            (FOLDED_PNG, self.folded.png_bytes()?),
            (ASSEMBLY_TXT, self.assembly.as_bytes().to_vec()),
        ])
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(io_at(dir))?;
        self.files()?
            .into_iter()
            .map(|(name, bytes)| write_file(dir, name, &bytes))
            .collect()
    }

    /// Zip of the written files with fixed timestamps.
    pub fn zip(&self) -> Result<Vec<u8>> {
        let mut zw = zip::ZipWriter::new(Cursor::new(Vec::new()));
        let opts = SimpleFileOptions::default()
            .compression_method(zip::CompressionMethod::Deflated)
            .last_modified_time(zip::DateTime::default())
            .unix_permissions(0o644);
        for (name, bytes) in self.files()? {
            zw.start_file(name, opts)?;
            zw.write_all(&bytes).map_err(io_at(Path::new(name)))?;
        }
        Ok(zw.finish()?.into_inner())
    }
}

/// Keeps the last paper stage and rebuilds it only when its inputs change.
#[derive(Default)]
pub struct Pipeline {
    cached: Option<(String, Arc<PaperStage>)>,
    /// Number of paper stages built so far.
    pub paper_builds: usize,
}

fn paper_key(cfg: &ProjectConfig) -> String {
    let inputs: Vec<_> = cfg
        .structures
        .iter()
        .map(|s| (&s.path, s.decimate_target))
        .collect();
    serde_json::to_string(&(inputs, &cfg.papercraft, cfg.seed)).expect("key serializes")
}

impl Pipeline {
    pub fn paper_stage(
        &mut self,
        cfg: &ProjectConfig,
        meshes: &[TriangleMesh],
    ) -> Result<Arc<PaperStage>> {
        let key = paper_key(cfg);
        if let Some((k, stage)) = &self.cached {
            if *k == key {
                return Ok(stage.clone());
            }
        }
        let stage = Arc::new(build_paper_stage(cfg, meshes)?);
        self.paper_builds += 1;
        self.cached = Some((key, stage.clone()));
        Ok(stage)
    }

    pub fn run_3d(&mut self, cfg: &ProjectConfig, structures: &[Structure]) -> Result<Artifacts3d> {
        let meshes: Vec<TriangleMesh> = structures.iter().map(|s| s.mesh.clone()).collect();
        let stage = self.paper_stage(cfg, &meshes)?;
        let atlas = project_atlas(cfg, structures, &stage, &[])?;
        present_3d(cfg, &stage, &atlas)
    }
}

pub fn run_3d(cfg: &ProjectConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let structures = colorize(cfg, &load_meshes(cfg)?)?;
    Pipeline::default().run_3d(cfg, &structures)?.write(out_dir)
}
