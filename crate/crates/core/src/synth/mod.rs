//! Ground-truth scenario generator: an analytic rail scene (ego and
//! parallel rails, ground, poles, platforms) observed by a simulated lidar
//! and pinhole cameras along a known trajectory, with corrupted GNSS.

mod generate;
mod scenario;
pub mod sensors;
mod truth;
mod verify;
mod world;

pub use generate::{
    annotation_path, feature_annotations, generate, pipeline_config, SynthOutput, PIPELINE_JSON, SCENARIO_JSON, SCENE_JSON,
};
pub use scenario::{
    CameraSpec, GnssNoise, LidarSpec, PlatformSpec, PoleSpec, SceneSpec, SynthScenario, TrackKind, TrackSpec,
    RAIL_HEIGHT,
};
pub use truth::{rail_points, GroundTruth, TRUTH_JSON};
pub use verify::{verify_against_truth, CenterlineErrors, PoseErrors, TruthReport};
pub use world::{true_body_pose, SynthWorld, BACKGROUND_STENCIL, RAIL_WIDTH};

use crate::ingest::IngestError;
use crate::render::RenderError;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("expected {expected} poses, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

pub fn load_scenario(path: &std::path::Path) -> Result<SynthScenario, SynthError> {
    let s: SynthScenario = crate::ingest::read_json(path)?;
    s.validate()?;
    Ok(s)
}
