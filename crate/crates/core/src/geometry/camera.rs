use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::{GeometryError, RigidTransform};

/// A timestamped world-from-body pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub timestamp: f64,
    pub transform: RigidTransform,
}

impl Pose {
    pub fn new(timestamp: f64, transform: RigidTransform) -> Self {
        Self { timestamp, transform }
    }

    pub fn position(&self) -> Point3<f64> {
        Point3::from(*self.transform.translation())
    }
}

/// Pixel coordinates and camera-frame depth of a projected point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// Rectified pinhole camera. The camera frame is x-right, y-down, z-forward.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub body_from_camera: RigidTransform,
}

impl CameraModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        body_from_camera: RigidTransform,
    ) -> Result<Self, GeometryError> {
        let cam = Self { fx, fy, cx, cy, width, height, body_from_camera };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let Self { fx, fy, cx, cy, width, height, .. } = *self;
        if !(fx.is_finite() && fy.is_finite() && fx > 0.0 && fy > 0.0) {
            return Err(GeometryError::InvalidCamera(format!("focal lengths must be positive, got fx={fx} fy={fy}")));
        }
        if !(cx >= 0.0 && cx < f64::from(width) && cy >= 0.0 && cy < f64::from(height)) {
            return Err(GeometryError::InvalidCamera(format!(
                "principal point ({cx}, {cy}) outside {width}x{height}"
            )));
        }
        Ok(())
    }

    /// Pinhole projection of a camera-frame point. No bounds clipping.
    pub fn project(&self, p_cam: &Vector3<f64>) -> Result<Projection, GeometryError> {
        if !(p_cam.z > 0.0) {
            return Err(GeometryError::PointBehindCamera { z: p_cam.z });
        }
        Ok(Projection {
            u: self.fx * p_cam.x / p_cam.z + self.cx,
            v: self.fy * p_cam.y / p_cam.z + self.cy,
            depth: p_cam.z,
        })
    }

    pub fn back_project(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        self.pixel_ray(u, v) * depth
    }

    /// Camera-frame ray through pixel `(u, v)`, scaled so that its z component is 1.
    pub fn pixel_ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    pub fn world_from_camera(&self, pose: &Pose) -> RigidTransform {
        pose.transform.compose(&self.body_from_camera)
    }

    pub fn camera_from_world(&self, pose: &Pose) -> RigidTransform {
        self.world_from_camera(pose).inverse()
    }

    pub fn project_world(&self, pose: &Pose, p_world: &Point3<f64>) -> Result<Projection, GeometryError> {
        let p = self.camera_from_world(pose).apply(p_world);
        self.project(&p.coords)
    }

    /// Whether continuous pixel coordinates fall inside `[0, width) × [0, height)`.
    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < f64::from(self.width) && v < f64::from(self.height)
    }

    /// Nearest pixel for a projection, if inside the image.
    pub fn pixel_of(&self, u: f64, v: f64) -> Option<(u32, u32)> {
        let (x, y) = (u.round(), v.round());
        if x >= 0.0 && y >= 0.0 && x < f64::from(self.width) && y < f64::from(self.height) {
            Some((x as u32, y as u32))
        } else {
            None
        }
    }
}

pub fn project(cam: &CameraModel, p_cam: &Vector3<f64>) -> Result<Projection, GeometryError> {
    cam.project(p_cam)
}
