use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("mesh has no triangles")]
    EmptyMesh,

    #[error("configuration error: {0}")]
    Config(String),

    /// Mean-plane flattening needs a non-zero average normal.
    #[error("degenerate selection: {0}")]
    DegenerateSelection(String),

    #[error("layout does not fit the page; required scale is {required_scale:.4} mm per unit")]
    DoesNotFit { required_scale: f64 },

    #[error("unfolding failed after {attempts} attempts; overlapping triangles: {overlaps:?}")]
    Unfold {
        attempts: usize,
        overlaps: Vec<(usize, usize)>,
    },

    /// Internal contract violation, e.g. unsorted fragment lists.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("image encoding failed: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
