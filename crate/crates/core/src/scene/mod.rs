//! World-frame scene geometry from per-frame clouds and label masks:
//! registration, semantic labeling, ego-track centerline, planes and poles.

mod centerline;
mod dbscan;
mod extract;
mod label;
mod mapping;
mod ransac;
mod register;

pub use centerline::{extract_centerline, CenterlineParams};
pub use dbscan::{cluster_poles, PoleCluster};
pub use extract::{
    extract_scene, load_centerline, load_extracted, save_centerline, save_extracted, ExtractParams, ExtractedScene,
    ScenePlane, CENTERLINE_JSON, PLANES_JSON, POLES_JSON, REGISTERED_PLY,
};
pub use label::{label_points, LabelMode};
pub use mapping::{fit_planar_rigid, register_scan_to_map, MapRegistrationParams};
pub use ransac::{fit_plane_least_squares, fit_plane_ransac, fit_planes_sequential, Plane, RansacParams};
pub use register::{register_clouds, register_loaded, voxel_dedup};


use crate::geometry::GeometryError;
use crate::ingest::IngestError;

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("{clouds} clouds but {poses} poses")]
    LengthMismatch { clouds: usize, poses: usize },
    #[error("mask is {got:?}, camera expects {expected:?}")]
    SizeMismatch { expected: (u32, u32), got: (u32, u32) },
    #[error("{found} usable track points, need at least {required}")]
    InsufficientTrackPoints { found: usize, required: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}
