#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chromafold::ProjectConfig;

/// Demo meshes and configs written into a fresh temporary directory.
pub struct Demo {
    pub dir: tempfile::TempDir,
}

impl Demo {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        chromafold::demo::write_demo(dir.path()).unwrap();
        Demo { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(format!("{name}.toml"))
    }

    /// Writes a copy of demo `name` with `edits` applied as text
    /// replacements and returns its path.
    pub fn variant(&self, name: &str, tag: &str, edits: &[(&str, &str)]) -> PathBuf {
        let mut text = std::fs::read_to_string(self.path(name)).unwrap();
        for (from, to) in edits {
            assert!(text.contains(from), "{from:?} not in {name}");
            text = text.replacen(from, to, 1);
        }
        let p = self.dir.path().join(format!("{name}_{tag}.toml"));
        std::fs::write(&p, text).unwrap();
        p
    }

    pub fn config(&self, path: &Path) -> ProjectConfig {
        ProjectConfig::load(path).unwrap()
    }
}

/// Small viewport and atlas for quick runs.
pub const SMALL: &[(&str, &str)] = &[
    ("width = 512", "width = 128"),
    ("height = 512", "height = 128"),
    ("atlas_resolution = 1024", "atlas_resolution = 256"),
];
