//! Project configuration: a TOML file naming the structures, the camera and
//! the render and papercraft settings.
//!
//! ```toml
//! seed = 7
//!
//! [[structures]]
//! path = "meshes/inner.obj"
//! hue = "cyan"
//! opacity = 1.0
//! decimate_target = 100000
//!
//! [camera]
//! position = [0.0, 0.0, 6.0]
//! look_at = [0.0, 0.0, 0.0]
//! up = [0.0, 1.0, 0.0]
//! vfov = 35.0
//!
//! [render]
//! width = 512
//! height = 512
//! brighten_target = 0.9
//!
//! [papercraft]
//! subdivision_level = 1
//! atlas_resolution = 2048
//!
//! [papercraft.page]
//! width_mm = 210.0
//! height_mm = 297.0
//! ```
//!
//! Relative structure paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use chromafold_core::color::Hue;
use chromafold_core::geom::{P3, V3};
use chromafold_core::papercraft::{PageSpec, MIN_ATLAS_RESOLUTION};
use chromafold_core::render::{Camera, DEFAULT_AMBIENT_FLOOR};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HueName {
    Cyan,
    Magenta,
    Yellow,
}

impl From<HueName> for Hue {
    fn from(h: HueName) -> Hue {
        match h {
            HueName::Cyan => Hue::Cyan,
            HueName::Magenta => Hue::Magenta,
            HueName::Yellow => Hue::Yellow,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_decimate_target() -> usize {
    100_000
}
fn default_up() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}
fn default_vfov() -> f64 {
    45.0
}
fn default_near() -> f64 {
    0.01
}
fn default_far() -> f64 {
    1000.0
}
fn default_brighten() -> f64 {
    0.9
}
fn default_ambient() -> f64 {
    DEFAULT_AMBIENT_FLOOR
}
fn default_level() -> u32 {
    1
}
fn default_atlas() -> usize {
    2048
}
fn default_page_width() -> f64 {
    210.0
}
fn default_page_height() -> f64 {
    297.0
}
fn default_margin() -> f64 {
    10.0
}
fn default_true() -> bool {
    true
}
fn default_mm_per_unit() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConfig {
    pub path: PathBuf,
    pub hue: HueName,
    #[serde(default = "one")]
    pub opacity: f64,
    #[serde(default = "default_decimate_target")]
    pub decimate_target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    #[serde(default = "default_up")]
    pub up: [f64; 3],
    #[serde(default = "default_vfov")]
    pub vfov: f64,
    #[serde(default = "default_near")]
    pub near: f64,
    #[serde(default = "default_far")]
    pub far: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_brighten")]
    pub brighten_target: f64,
    /// Lowest headlight factor; 1 renders every structure in its flat hue.
    #[serde(default = "default_ambient")]
    pub ambient_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageConfig {
    #[serde(default = "default_page_width")]
    pub width_mm: f64,
    #[serde(default = "default_page_height")]
    pub height_mm: f64,
    #[serde(default = "default_margin")]
    pub margin_mm: f64,
    #[serde(default = "default_true")]
    pub auto_scale: bool,
    /// Layout scale used when `auto_scale` is off.
    #[serde(default = "default_mm_per_unit")]
    pub mm_per_unit: f64,
}

impl Default for PageConfig {
    fn default() -> Self {
        PageConfig {
            width_mm: default_page_width(),
            height_mm: default_page_height(),
            margin_mm: default_margin(),
            auto_scale: true,
            mm_per_unit: default_mm_per_unit(),
        }
    }
}

impl PageConfig {
    pub fn spec(&self) -> PageSpec {
        PageSpec {
            width_mm: self.width_mm,
            height_mm: self.height_mm,
            margin_mm: self.margin_mm,
            auto_scale: self.auto_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PapercraftConfig {
    #[serde(default = "default_level")]
    pub subdivision_level: u32,
    #[serde(default)]
    pub smoothing_iters: usize,
    #[serde(default = "default_atlas")]
    pub atlas_resolution: usize,
    #[serde(default)]
    pub page: PageConfig,
    #[serde(default)]
    pub wrap_offset: f64,
}

impl Default for PapercraftConfig {
    fn default() -> Self {
        PapercraftConfig {
            subdivision_level: default_level(),
            smoothing_iters: 0,
            atlas_resolution: default_atlas(),
            page: PageConfig::default(),
            wrap_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub structures: Vec<StructureConfig>,
    pub camera: CameraConfig,
    pub render: RenderConfig,
    #[serde(default)]
    pub papercraft: PapercraftConfig,
    #[serde(default)]
    pub seed: u64,
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> PipelineError {
    PipelineError::Config {
        field: field.into(),
        message: message.into(),
    }
}

fn finite3(v: &[f64; 3]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl ProjectConfig {
    /// Reads, validates and resolves structure paths against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for s in &mut cfg.structures {
            if s.path.is_relative() {
                s.path = base.join(&s.path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without touching the file system.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| locate_key(text, s.start))
                .unwrap_or_default();
            field_err(field, e.message().to_string())
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every invariant except file existence.
    pub fn validate_values(&self) -> Result<()> {
        let n = self.structures.len();
        if n == 0 || n > 3 {
            return Err(field_err(
                "structures",
                format!("expected 1 to 3 structures, got {n}"),
            ));
        }
        for (i, s) in self.structures.iter().enumerate() {
            if self.structures[..i].iter().any(|o| o.hue == s.hue) {
                return Err(field_err(
                    format!("structures[{i}].hue"),
                    format!("hue {:?} is already used", s.hue).to_lowercase(),
                ));
            }
            if !(0.0..=1.0).contains(&s.opacity) {
                return Err(field_err(
                    format!("structures[{i}].opacity"),
                    "must lie in [0, 1]",
                ));
            }
            if s.decimate_target < 4 {
                return Err(field_err(
                    format!("structures[{i}].decimate_target"),
                    "must be at least 4",
                ));
            }
        }
        let c = &self.camera;
        if !finite3(&c.position) || !finite3(&c.look_at) || !finite3(&c.up) {
            return Err(field_err("camera", "coordinates must be finite"));
        }
        if !(c.vfov > 0.0 && c.vfov < 180.0) {
            return Err(field_err("camera.vfov", "must lie in (0, 180)"));
        }
        if !(c.near > 0.0 && c.near < c.far) {
            return Err(field_err("camera.near", "need 0 < near < far"));
        }
        let r = &self.render;
        if r.width == 0 || r.height == 0 {
            return Err(field_err("render.width", "viewport must be at least 1x1"));
        }
        if !(r.brighten_target > 0.0 && r.brighten_target <= 1.0) {
            return Err(field_err("render.brighten_target", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&r.ambient_floor) {
            return Err(field_err("render.ambient_floor", "must lie in [0, 1]"));
        }
        if let Err(e) = self.camera() {
            return Err(field_err("camera", e.to_string()));
        }
        let p = &self.papercraft;
        if p.subdivision_level > 6 {
            return Err(field_err(
                "papercraft.subdivision_level",
                "at most 6 (49152 triangles)",
            ));
        }
        if p.atlas_resolution < MIN_ATLAS_RESOLUTION || !p.atlas_resolution.is_power_of_two() {
            return Err(field_err(
                "papercraft.atlas_resolution",
                format!("must be a power of two >= {MIN_ATLAS_RESOLUTION}"),
            ));
        }
        if !p.wrap_offset.is_finite() {
            return Err(field_err("papercraft.wrap_offset", "must be finite"));
        }
        let g = &p.page;
        if !(g.width_mm > 2.0 * g.margin_mm && g.height_mm > 2.0 * g.margin_mm && g.margin_mm >= 0.0)
        {
            return Err(field_err(
                "papercraft.page",
                "page must be larger than twice the margin",
            ));
        }
        if !(g.mm_per_unit > 0.0 && g.mm_per_unit.is_finite()) {
            return Err(field_err("papercraft.page.mm_per_unit", "must be positive"));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_values()?;
        for (i, s) in self.structures.iter().enumerate() {
            if !s.path.is_file() {
                return Err(field_err(
                    format!("structures[{i}].path"),
                    format!("{} is not a readable file", s.path.display()),
                ));
            }
        }
        Ok(())
    }

    pub fn camera(&self) -> chromafold_core::Result<Camera> {
        let c = &self.camera;
        Camera::perspective(
            P3::from(c.position),
            P3::from(c.look_at),
            V3::from(c.up),
            c.vfov,
            c.near,
            c.far,
            self.render.width,
            self.render.height,
        )
    }
}

/// Dotted path of the table key whose value starts at byte `offset`, as far
/// as a line scan can tell.
fn locate_key(text: &str, offset: usize) -> String {
    let mut table = String::new();
    let mut counts: std::collections::HashMap<String, usize> = Default::default();
    let mut key = String::new();
    let mut pos = 0;
    for line in text.split_inclusive('\n') {
        let t = line.trim();
        if pos > offset {
            break;
        }
        if let Some(name) = t.strip_prefix("[[").and_then(|r| r.strip_suffix("]]")) {
            let name = name.trim().to_string();
            let c = counts.entry(name.clone()).or_insert(0);
            table = format!("{name}[{c}]");
            *c += 1;
            key.clear();
        } else if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            table = name.trim().replace("structures.", "structures[].");
            key.clear();
        } else if let Some((k, _)) = t.split_once('=') {
            key = k.trim().to_string();
        }
        pos += line.len();
    }
    match (table.is_empty(), key.is_empty()) {
        (true, _) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}
