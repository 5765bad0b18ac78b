//! Rigid transforms, the pinhole camera, point clouds, images and the track
//! centerline. Everything here is immutable once built and `Sync`.

mod camera;
mod centerline;
mod classes;
mod cloud;
mod image;
mod transform;

pub use camera::{project, CameraModel, Pose, Projection};
pub use centerline::{CenterlineProjection, TrackCenterline};
pub use classes::SemanticClassMap;
pub use cloud::{transform_cloud, CloudFrame, LabeledPointCloud};
pub use image::{ImageBuffer, PixelData, PixelFormat};
pub use transform::{compose, invert, nearest_rotation, orthonormality_error, RigidTransform, ORTHONORMAL_TOL};

pub mod class_names {
    pub use super::classes::{
        CALIBRATION_SPHERE, NEAR_TRACK_GROUND, OBSTACLE_BASE, PLATFORM, POLE, TRACK, UNLABELED,
    };
}

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("rotation is not orthonormal (max |R·Rᵀ − I| = {max_error:e})")]
    NotOrthonormal { max_error: f64 },
    #[error("non-finite value")]
    NonFinite,
    #[error("point behind camera (z = {z})")]
    PointBehindCamera { z: f64 },
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid centerline: {0}")]
    Centerline(String),
    #[error("invalid class map: {0}")]
    ClassMap(String),
    #[error("label id {0} is not registered in the class map")]
    UnknownLabel(u16),
    #[error("expected {expected:?} image, got {got:?}")]
    WrongFormat { expected: PixelFormat, got: PixelFormat },
}
