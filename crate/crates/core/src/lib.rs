//! Augmentation of rail sensor sequences (camera images, LiDAR clouds and
//! INS/GNSS poses) with geometrically consistent virtual obstacles.
//!
//! The crate is organized along the processing pipeline:
//!
//! 1. [`ingest`] loads and writes the on-disk sequence bundle.
//! 2. [`scene`] registers and labels clouds and extracts the ego-track
//!    centerline, planes and poles.
//! 3. [`localization`] produces raw, LiDAR-odometry and centerline-refined
//!    pose sequences.
//! 4. [`render`] builds the minimal virtual scene and raycasts stencil masks,
//!    depth, color and occluded point clouds.
//! 5. [`composite`] blends the rendered objects into the real images.
//! 6. [`eval`] scores the alignment with reprojection error and jitter.
//!
//! [`synth`] generates ground-truth scenarios for all of the above and
//! [`pipeline`] chains the stages the way the `railar` binary does.

pub mod composite;
pub mod eval;
pub mod geometry;
pub mod ingest;
pub mod localization;
pub mod pipeline;
pub mod render;
pub mod scene;
pub mod synth;

pub use geometry::{
    CameraModel, CloudFrame, ImageBuffer, LabeledPointCloud, Pose, RigidTransform, SemanticClassMap,
    TrackCenterline,
};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/bundle.md")]
mod book_bundle {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/geometry.md")]
mod book_geometry {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/scene.md")]
mod book_scene {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/localization.md")]
mod book_localization {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/render.md")]
mod book_render {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/composite.md")]
mod book_composite {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/eval.md")]
mod book_eval {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/synth.md")]
mod book_synth {}
