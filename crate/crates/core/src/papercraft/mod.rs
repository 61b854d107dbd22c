//! The foldable 3D path: paper mesh, net, UV atlas, texture projection and
//! the printable sheet.

mod flatten;
mod packing;
mod paper;
mod sheet;
mod texture;
mod unfold;
mod uv;

pub use flatten::{flatten_mesh, flatten_selection, FlattenSelection};
pub use packing::shelf_pack;
pub use paper::{generate_paper_mesh, wrap_per_structure, PaperMesh, WrapParams, WrappedPaperMesh};
pub use sheet::{assembly_text, layout_to_print_sheet, PageSpec, PrintSheet};
pub use texture::{
    combine_textures, project_texture, triangle_camera, ProjectionOptions, TextureAtlas,
    DEFAULT_ATLAS_RESOLUTION, DEFAULT_SUPERSAMPLE, FRAME_MARGIN, MIN_ATLAS_RESOLUTION,
};
pub use unfold::{
    unfold, EdgeKind, FoldDirection, Island, LayoutEdge, PlanarLayout, Tab, UnfoldOptions,
    DEFAULT_ATTEMPTS, MAX_TAB_DEPTH_MM, OVERLAP_AREA_EPS, TAB_DEPTH_FRACTION,
};
pub use uv::{assign_uv, UvMap, UV_GUTTER_TEXELS};
