//! On-disk sequence bundles.
//!
//! A bundle is a directory holding `manifest.json`, binary PLY clouds and PNG
//! images. Layout of the manifest:
//!
//! ```text
//! {
//!   "sequence": "name",
//!   "cameras": {"<id>": {"fx", "fy", "cx", "cy", "width", "height",
//!                        "body_from_camera": {"R": [9], "t": [3]}}},
//!   "lidar": {"body_from_lidar": {"R": [9], "t": [3]}},
//!   "frames": [{"index", "timestamp", "pose": {"R", "t"}, "cloud": "path",
//!               "images": {"<id>": "path"}, "labels": {"<id>": "path"}}],
//!   "class_map": {"<name>": id}
//! }
//! ```
//!
//! Rotations are row-major. Quaternions `{"q": [w, x, y, z]}` are accepted
//! instead of `R` on input and converted to matrices. Everything is validated
//! eagerly; a bundle that loads is complete.

mod annotations;
mod imageio;
mod json;
mod manifest;
mod mesh;
mod ply;
mod scene_config;

use std::path::PathBuf;

pub use annotations::{load_annotations, load_annotations_for, save_annotations, CalibrationAnnotation};
pub use imageio::{load_depth, load_image, load_label_mask, save_depth, save_png};
pub use json::{read_json, write_json, TransformJson};
pub use manifest::{load_sequence, save_sequence, write_manifest, FrameRecord, SequenceBundle, MANIFEST};
pub use mesh::{load_mesh, save_obj};
pub use ply::{load_pointcloud, save_pointcloud};
pub use scene_config::{
    load_scene_config, save_scene_config, CalibrationSphereSpec, LightSpec, ObjectPlacement, Placement, SceneConfig,
    TrackMeshSpec,
};

pub(crate) use json::schema;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("missing file {}", path.display())]
    MissingFile { path: PathBuf },
    #[error("{}: field `{field}`: {message}", path.display())]
    SchemaViolation { path: PathBuf, field: String, message: String },
    #[error("{}: timestamp of frame {index} ({current}) does not follow {previous}", path.display())]
    NonMonotoneTimestamps { path: PathBuf, index: usize, previous: f64, current: f64 },
    #[error("{}: malformed PLY: {message}", path.display())]
    MalformedPly { path: PathBuf, message: String },
    #[error("{}: unsupported PLY property `{property}` of type {ty}", path.display())]
    UnsupportedProperty { path: PathBuf, property: String, ty: String },
    #[error("annotation for frame {frame} at ({u}, {v}) is outside the image")]
    OutOfBoundsAnnotation { frame: usize, u: f64, v: f64 },
    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },
    #[error("{}: cannot load mesh: {message}", path.display())]
    MeshLoad { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}
