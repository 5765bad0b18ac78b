use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Pose, RigidTransform, TrackCenterline};

use super::{LocalizationError, PoseSequence, PoseSource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZMode {
    Keep,
    /// Centerline height plus a fixed offset, e.g. the body height above the rails.
    CenterlineOffset(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YawMode {
    Keep,
    Tangent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefineParams {
    pub z_mode: ZMode,
    pub yaw_mode: YawMode,
    /// Number of centerline segments averaged for the heading.
    pub tangent_smooth: usize,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self { z_mode: ZMode::Keep, yaw_mode: YawMode::Tangent, tangent_smooth: 5 }
    }
}

pub fn refine_pose(pose: &Pose, centerline: &TrackCenterline, params: &RefineParams) -> Pose {
    let t = pose.transform.translation();
    let proj = centerline.project_xy(&pose.position());
    let z = match params.z_mode {
        ZMode::Keep => t.z,
        ZMode::CenterlineOffset(h) => proj.point.z + h,
    };
    let translation = nalgebra::Vector3::new(proj.point.x, proj.point.y, z);
    let transform = match params.yaw_mode {
        YawMode::Keep => pose.transform.clone().with_translation(translation),
        YawMode::Tangent => {
            let (roll, pitch, _) = pose.transform.euler_angles();
            let yaw = centerline.smoothed_heading(proj.arclength, params.tangent_smooth / 2);
            RigidTransform::from_euler(roll, pitch, yaw, translation)
        }
    };
    Pose::new(pose.timestamp, transform)
}

/// Snaps every position onto the centerline in x-y and optionally re-derives
/// yaw from the smoothed centerline heading. Timestamps, and roll and pitch,
/// are kept.
pub fn refine_with_centerline(
    raw: &PoseSequence,
    centerline: &TrackCenterline,
    params: &RefineParams,
) -> Result<PoseSequence, LocalizationError> {
    if centerline.segment_count() == 0 {
        return Err(LocalizationError::EmptyCenterline);
    }
    let poses = raw.poses.par_iter().map(|p| refine_pose(p, centerline, params)).collect();
    Ok(PoseSequence::new(PoseSource::SegmentationRefined, poses))
}
