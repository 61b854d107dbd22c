pub mod color;
pub mod error;
pub mod geom;
pub mod image;
pub mod mesh;
pub mod papercraft;
pub mod render;
pub mod scene;

pub use error::{Error, Result};
