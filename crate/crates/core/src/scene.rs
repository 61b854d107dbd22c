use crate::color::Hue;
use crate::error::{invalid, Result};
use crate::mesh::TriangleMesh;

/// A mesh printed in one ink.
#[derive(Debug, Clone)]
pub struct Structure {
    pub name: String,
    pub mesh: TriangleMesh,
    pub hue: Hue,
    /// Ink coverage in `[0, 1]`.
    pub opacity: f64,
}

impl Structure {
    pub fn new(name: impl Into<String>, mesh: TriangleMesh, hue: Hue, opacity: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&opacity) {
            return Err(invalid(format!("opacity {opacity} outside [0, 1]")));
        }
        Ok(Structure {
            name: name.into(),
            mesh,
            hue,
            opacity,
        })
    }

    pub fn opaque(name: impl Into<String>, mesh: TriangleMesh, hue: Hue) -> Self {
        Structure {
            name: name.into(),
            mesh,
            hue,
            opacity: 1.0,
        }
    }
}
