use crate::error::{invalid, Result};
use crate::geom::{P3, V3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Vertical field of view in degrees.
    Perspective { vfov_deg: f64 },
    /// Half extents of the view volume in world units.
    Orthographic { half_width: f64, half_height: f64 },
}

/// Pinhole or orthographic camera with a pixel viewport.
///
/// Screen space has its origin at the top-left corner with `y` growing
/// downwards; pixel `(x, y)` is sampled at its center `(x + 0.5, y + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub position: P3,
    pub look_at: P3,
    pub up: V3,
    pub projection: Projection,
    pub near: f64,
    pub far: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Basis {
    pub right: V3,
    pub up: V3,
    pub forward: V3,
}

impl Camera {
    #[allow(clippy::too_many_arguments)]
    pub fn perspective(
        position: P3,
        look_at: P3,
        up: V3,
        vfov_deg: f64,
        near: f64,
        far: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let cam = Camera {
            position,
            look_at,
            up,
            projection: Projection::Perspective { vfov_deg },
            near,
            far,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn orthographic(
        position: P3,
        look_at: P3,
        up: V3,
        half_width: f64,
        half_height: f64,
        near: f64,
        far: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let cam = Camera {
            position,
            look_at,
            up,
            projection: Projection::Orthographic {
                half_width,
                half_height,
            },
            near,
            far,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(invalid("viewport must be at least 1x1"));
        }
        if !(self.near > 0.0 && self.near < self.far) {
            return Err(invalid(format!(
                "need 0 < near < far, got near={} far={}",
                self.near, self.far
            )));
        }
        let dir = self.look_at - self.position;
        if dir.norm() == 0.0 {
            return Err(invalid("camera position equals look_at"));
        }
        let f = dir.normalize();
        let upn = self.up.norm();
        if upn == 0.0 || f.cross(&(self.up / upn)).norm() < 1e-9 {
            return Err(invalid("up vector is parallel to the view direction"));
        }
        match self.projection {
            Projection::Perspective { vfov_deg } if !(vfov_deg > 0.0 && vfov_deg < 180.0) => {
                Err(invalid(format!("vfov {vfov_deg} outside (0, 180)")))
            }
            Projection::Orthographic {
                half_width,
                half_height,
            } if !(half_width > 0.0 && half_height > 0.0) => {
                Err(invalid("orthographic extents must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn with_viewport(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub(crate) fn basis(&self) -> Basis {
        let forward = (self.look_at - self.position).normalize();
        let right = forward.cross(&self.up).normalize();
        let up = right.cross(&forward);
        Basis { right, up, forward }
    }

    pub fn forward(&self) -> V3 {
        self.basis().forward
    }

    /// Distance of `p` along the viewing direction.
    pub fn depth_of(&self, p: &P3) -> f64 {
        (p - self.position).dot(&self.basis().forward)
    }

    fn aspect(&self) -> f64 {
        self.width as f64 / self.height as f64
    }

    /// Eye-space `(x, y, depth)` to continuous screen coordinates.
    pub(crate) fn eye_to_screen(&self, x: f64, y: f64, depth: f64) -> (f64, f64) {
        let (nx, ny) = match self.projection {
            Projection::Perspective { vfov_deg } => {
                let t = (vfov_deg.to_radians() * 0.5).tan();
                (x / (depth * t * self.aspect()), y / (depth * t))
            }
            Projection::Orthographic {
                half_width,
                half_height,
            } => (x / half_width, y / half_height),
        };
        (
            (nx + 1.0) * 0.5 * self.width as f64,
            (1.0 - ny) * 0.5 * self.height as f64,
        )
    }

    pub fn is_perspective(&self) -> bool {
        matches!(self.projection, Projection::Perspective { .. })
    }

    /// World-space ray through continuous screen position `(sx, sy)`.
    pub fn ray(&self, sx: f64, sy: f64) -> (P3, V3) {
        let b = self.basis();
        let nx = 2.0 * sx / self.width as f64 - 1.0;
        let ny = 1.0 - 2.0 * sy / self.height as f64;
        match self.projection {
            Projection::Perspective { vfov_deg } => {
                let t = (vfov_deg.to_radians() * 0.5).tan();
                let dir = b.forward + b.right * (nx * t * self.aspect()) + b.up * (ny * t);
                (self.position, dir.normalize())
            }
            Projection::Orthographic {
                half_width,
                half_height,
            } => (
                self.position + b.right * (nx * half_width) + b.up * (ny * half_height),
                b.forward,
            ),
        }
    }

    /// Ray through the center of pixel `(x, y)`.
    pub fn pixel_ray(&self, x: usize, y: usize) -> (P3, V3) {
        self.ray(x as f64 + 0.5, y as f64 + 0.5)
    }

    /// Projects a world point to screen coordinates and depth.
    pub fn project(&self, p: &P3) -> (f64, f64, f64) {
        let b = self.basis();
        let d = p - self.position;
        let depth = d.dot(&b.forward);
        let (sx, sy) = self.eye_to_screen(d.dot(&b.right), d.dot(&b.up), depth);
        (sx, sy, depth)
    }
}
