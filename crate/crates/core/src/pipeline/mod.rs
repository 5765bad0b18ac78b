//! Stage orchestration over an on-disk output tree.
//!
//! Every stage reads its inputs from the output directory (or the bundle)
//! and writes its results back there, so running the stages one by one
//! gives the same files as [`Pipeline::run_all`].
//!
//! ```text
//! out/
//!   extracted/            registered.ply centerline.json planes.json poles.json registration_poses.json
//!   poses/                raw_gnss.json icp_odometry.json segmentation_refined.json
//!   render/{cam}/         {frame}_color.png {frame}_mask.png {frame}_depth.bin render.json
//!   clouds_aug/           {frame}.ply
//!   augmented/{cam}/      {frame}.png composite_report.json
//!   metrics.csv metrics.json calibration_points.json
//!   summary.txt report/{cam}/{frame}.png
//! ```

mod config;
mod stages;

pub use config::{CalibrationParams, ExtractStageParams, PipelineConfig, Registration, RenderStageParams};
pub use stages::{Pipeline, StageSummary, STAGES};

use std::path::{Path, PathBuf};

use crate::ingest::IngestError;
use crate::localization::PoseSource;

pub const EXTRACTED_DIR: &str = "extracted";
pub const REGISTRATION_POSES_JSON: &str = "registration_poses.json";
pub const POSES_DIR: &str = "poses";
pub const RENDER_DIR: &str = "render";
pub const RENDER_JSON: &str = "render.json";
pub const CLOUDS_AUG_DIR: &str = "clouds_aug";
pub const AUGMENTED_DIR: &str = "augmented";
pub const COMPOSITE_REPORT_JSON: &str = "composite_report.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const CALIBRATION_POINTS_JSON: &str = "calibration_points.json";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const REPORT_DIR: &str = "report";

pub fn poses_path(out: &Path, source: PoseSource) -> PathBuf {
    out.join(POSES_DIR).join(format!("{source}.json"))
}

pub fn augmented_path(out: &Path, cam: &str, frame: usize) -> PathBuf {
    out.join(AUGMENTED_DIR).join(cam).join(frame_name(frame, "png"))
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool").install(f),
        None => f(),
    }
}

pub fn frame_name(frame: usize, ext: &str) -> String {
    format!("{frame:06}.{ext}")
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{stage}: {source}")]
    Input {
        stage: &'static str,
        #[source]
        source: IngestError,
    },
    #[error("{stage}{}: {message}", frame.map(|f| format!(" (frame {f})")).unwrap_or_default())]
    Stage { stage: &'static str, frame: Option<usize>, message: String },
}

impl PipelineError {
    /// 2 for invalid configuration or input files, 3 for failures while a
    /// stage is running.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config { .. } => 2,
            PipelineError::Input { source: IngestError::Io { .. }, .. } => 3,
            PipelineError::Input { .. } => 2,
            PipelineError::Stage { .. } => 3,
        }
    }

    pub(crate) fn stage(stage: &'static str, frame: Option<usize>, e: impl std::fmt::Display) -> Self {
        PipelineError::Stage { stage, frame, message: e.to_string() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let cfg = PipelineError::Config { field: "scene_config".into(), message: "missing".into() };
        assert_eq!(cfg.exit_code(), 2);
        assert!(cfg.to_string().contains("scene_config"));
        let run = PipelineError::stage("render", Some(4), "boom");
        assert_eq!(run.exit_code(), 3);
        assert_eq!(run.to_string(), "render (frame 4): boom");
        let missing = PipelineError::Input { stage: "extract", source: IngestError::MissingFile { path: "x".into() } };
        assert_eq!(missing.exit_code(), 2);
    }
}
