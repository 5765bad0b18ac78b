//! Deterministic raycast rendering of the virtual scene: procedural
//! environment meshes, placed obstacles, per-frame color/stencil/depth
//! buffers and lidar occlusion.

mod frame;
mod mesh;
mod place;
pub(crate) mod procedural;
mod raycast;

pub use frame::{
    classify_point, frame_paths, load_frame_render, occlude_pointcloud, render_frame, save_frame_render, shade,
    FrameRender, Occlusion, OcclusionMode, OCCLUSION_EPSILON,
};
pub use mesh::{TriangleMesh, MIN_TRIANGLE_AREA};
pub use place::{
    build_environment, calibration_sphere_mesh, place_objects, plane_anchors, PlaneAnchor, PLANE_COLOR, POLE_COLOR,
    SPHERE_COLOR, TRACK_COLOR,
};
pub use procedural::{
    box_mesh, build_plane_mesh, build_pole_mesh, build_track_mesh, plane_basis, uv_sphere, MIN_POLE_HEIGHT,
};
pub use raycast::{intersect_triangle, Hit, Raycaster, RAY_T_MIN};

use crate::ingest::IngestError;

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("object `{name}`: arc length {arclength} outside centerline [0, {length}]")]
    ArclengthOutOfRange { name: String, arclength: f64, length: f64 },
    #[error("object `{name}`: {message}")]
    InvalidPlacement { name: String, message: String },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}
