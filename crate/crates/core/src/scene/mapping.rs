use std::collections::HashSet;

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{LabeledPointCloud, Pose, RigidTransform};
use crate::localization::{align, IcpParams};

use super::register::{voxel_dedup, voxel_key};
use super::SceneError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapRegistrationParams {
    pub icp: IcpParams,
    /// Cell size of the accumulated map; the first point per cell is kept.
    pub map_voxel: f64,
    /// Only points above this body-frame height take part; flat ground
    /// constrains the motion along the track poorly and dominates the count.
    pub min_body_z: f64,
}

impl Default for MapRegistrationParams {
    fn default() -> Self {
        Self { icp: IcpParams::default(), map_voxel: 0.25, min_body_z: 0.3 }
    }
}

/// Planar rigid motion (yaw about z plus translation) minimizing the squared
/// distance from `src[i]` to `dst[i]`. Collinear trajectories leave roll and
/// pitch unobservable, so only the planar part is estimated.
pub fn fit_planar_rigid(src: &[Point3<f64>], dst: &[Point3<f64>]) -> RigidTransform {
    let n = src.len().max(1) as f64;
    let cs: Vector3<f64> = src.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n;
    let cd: Vector3<f64> = dst.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n;
    let (mut dot, mut cross) = (0.0, 0.0);
    for (s, d) in src.iter().zip(dst) {
        let (a, b) = (s.coords - cs, d.coords - cd);
        dot += a.x * b.x + a.y * b.y;
        cross += a.x * b.y - a.y * b.x;
    }
    let yaw = if dot == 0.0 && cross == 0.0 { 0.0 } else { cross.atan2(dot) };
    let r = RigidTransform::from_yaw(yaw, Vector3::zeros());
    let t = cd - r.apply_vector(&cs);
    r.with_translation(t)
}

/// Scan-to-map registration for scene reconstruction. Each frame is aligned
/// against the map accumulated from all previous frames, starting from the
/// previous estimate advanced by the relative motion of `init`. The
/// resulting trajectory is finally moved by the planar rigid motion that
/// best fits it to `init`, so the map lives in the frame of `init`.
pub fn register_scan_to_map(
    clouds: &[LabeledPointCloud],
    init: &[Pose],
    body_from_lidar: &RigidTransform,
    params: &MapRegistrationParams,
) -> Result<Vec<Pose>, SceneError> {
    if clouds.len() != init.len() {
        return Err(SceneError::LengthMismatch { clouds: clouds.len(), poses: init.len() });
    }
    if init.is_empty() {
        return Ok(Vec::new());
    }
    let sampled: Vec<Vec<Point3<f64>>> = clouds
        .par_iter()
        .map(|c| {
            voxel_dedup(c, params.icp.voxel)
                .points()
                .iter()
                .filter(|p| body_from_lidar.apply(p).z > params.min_body_z)
                .copied()
                .collect()
        })
        .collect();
    let lidar_from_body = body_from_lidar.inverse();
    let mut seen = HashSet::new();
    let mut map: Vec<Point3<f64>> = Vec::new();
    let mut add = |map: &mut Vec<Point3<f64>>, pts: &[Point3<f64>], t: &RigidTransform| {
        for p in pts {
            let q = t.apply(p);
            if seen.insert(voxel_key(&q, params.map_voxel)) {
                map.push(q);
            }
        }
    };
    let mut out = vec![init[0]];
    add(&mut map, &sampled[0], &init[0].transform.compose(body_from_lidar));
    for k in 1..clouds.len() {
        let motion = init[k - 1].transform.inverse().compose(&init[k].transform);
        let guess = out[k - 1].transform.compose(&motion).compose(body_from_lidar);
        let world_from_lidar = align(&sampled[k], &map, &guess, &params.icp)
            .map_err(|e| SceneError::DegenerateInput(format!("map registration at frame {k}: {e}")))?;
        let est = world_from_lidar.compose(&lidar_from_body);
        let (roll, pitch, _) = init[k].transform.euler_angles();
        let (_, _, yaw) = est.euler_angles();
        let t = est.translation();
        let pose = RigidTransform::from_euler(roll, pitch, yaw, Vector3::new(t.x, t.y, init[k].transform.translation().z));
        add(&mut map, &sampled[k], &pose.compose(body_from_lidar));
        out.push(Pose::new(init[k].timestamp, pose));
    }
    let fit = fit_planar_rigid(
        &out.iter().map(Pose::position).collect::<Vec<_>>(),
        &init.iter().map(Pose::position).collect::<Vec<_>>(),
    );
    Ok(out.into_iter().map(|p| Pose::new(p.timestamp, fit.compose(&p.transform))).collect())
}
