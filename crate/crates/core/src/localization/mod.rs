//! The three pose sources compared by the evaluation: raw INS/GNSS,
//! frame-to-frame lidar odometry and poses snapped onto the extracted track
//! centerline.

mod icp;
mod refine;
mod sequence;

pub use icp::{align, icp_odometry, icp_odometry_loaded, kabsch, IcpParams, MIN_ICP_POINTS};
pub use refine::{refine_pose, refine_with_centerline, RefineParams, YawMode, ZMode};
pub use sequence::{PoseSequence, PoseSource};

use crate::ingest::{IngestError, SequenceBundle};

#[derive(Debug, thiserror::Error)]
pub enum LocalizationError {
    #[error("frame {frame}: {points} points after downsampling, need {required}")]
    TooFewPoints { frame: usize, points: usize, required: usize },
    #[error("ICP diverged with {correspondences} correspondences")]
    IcpDiverged { correspondences: usize },
    #[error("centerline is empty")]
    EmptyCenterline,
    #[error("{clouds} clouds but {poses} poses")]
    LengthMismatch { clouds: usize, poses: usize },
    #[error("{0}")]
    InvalidParams(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Manifest poses tagged as raw INS/GNSS.
pub fn raw_gnss(bundle: &SequenceBundle) -> PoseSequence {
    PoseSequence::new(PoseSource::RawGnss, bundle.poses())
}
