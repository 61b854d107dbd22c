//! Configuration, stage orchestration, demo scenes and the preview service
//! for turning closed meshes into filter-revealed prints and papercraft.

pub mod config;
pub mod demo;
mod error;
pub mod server;
pub mod stages;

pub use config::ProjectConfig;
pub use error::{PipelineError, Result};
pub use stages::{run_2d, run_3d, Pipeline};
