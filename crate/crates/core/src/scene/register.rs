use std::collections::HashSet;

use crate::geometry::{CloudFrame, LabeledPointCloud, Pose, RigidTransform};
use crate::ingest::SequenceBundle;
use crate::localization::PoseSequence;

use super::SceneError;

pub(crate) fn voxel_key(p: &nalgebra::Point3<f64>, voxel: f64) -> (i64, i64, i64) {
    (
        (p.x / voxel).floor() as i64,
        (p.y / voxel).floor() as i64,
        (p.z / voxel).floor() as i64,
    )
}

/// Keeps the first point of every occupied voxel, in input order.
pub fn voxel_dedup(cloud: &LabeledPointCloud, voxel: f64) -> LabeledPointCloud {
    if !(voxel > 0.0) {
        return cloud.clone();
    }
    let mut seen = HashSet::with_capacity(cloud.len());
    let keep: Vec<usize> = cloud
        .points()
        .iter()
        .enumerate()
        .filter_map(|(i, p)| seen.insert(voxel_key(p, voxel)).then_some(i))
        .collect();
    cloud.select(&keep)
}

/// Maps each lidar-frame cloud into the world with `world_from_body ∘
/// body_from_lidar` and concatenates them in frame order. With `voxel > 0`
/// only the first point per voxel cell survives.
pub fn register_loaded(
    clouds: &[LabeledPointCloud],
    poses: &[Pose],
    body_from_lidar: &RigidTransform,
    voxel: f64,
) -> Result<LabeledPointCloud, SceneError> {
    if clouds.len() != poses.len() {
        return Err(SceneError::LengthMismatch { clouds: clouds.len(), poses: poses.len() });
    }
    let with_intensity = clouds.iter().all(|c| c.intensity().is_some());
    let mut out = LabeledPointCloud::empty(CloudFrame::World, with_intensity && !clouds.is_empty());
    for (cloud, pose) in clouds.iter().zip(poses) {
        let world_from_lidar = pose.transform.compose(body_from_lidar);
        out.extend(&cloud.transformed(&world_from_lidar));
    }
    Ok(voxel_dedup(&out, voxel).with_frame(CloudFrame::World))
}

pub fn register_clouds(
    bundle: &SequenceBundle,
    poses: &PoseSequence,
    voxel: f64,
) -> Result<LabeledPointCloud, SceneError> {
    if bundle.len() != poses.len() {
        return Err(SceneError::LengthMismatch { clouds: bundle.len(), poses: poses.len() });
    }
    let clouds = bundle.load_clouds()?;
    register_loaded(&clouds, &poses.poses, &bundle.body_from_lidar, voxel)
}
