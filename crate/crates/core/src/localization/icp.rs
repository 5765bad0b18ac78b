use std::collections::HashMap;

use nalgebra::{Matrix3, Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{nearest_rotation, LabeledPointCloud, Pose, RigidTransform};
use crate::ingest::SequenceBundle;
use crate::scene::voxel_dedup;

use super::{LocalizationError, PoseSequence, PoseSource};

pub const MIN_ICP_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IcpParams {
    pub voxel: f64,
    pub max_corr_dist: f64,
    pub max_iters: usize,
    pub trans_tol: f64,
    pub rot_tol: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self { voxel: 0.5, max_corr_dist: 1.0, max_iters: 30, trans_tol: 1e-4, rot_tol: 1e-5 }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<(), String> {
        let ok = self.voxel > 0.0
            && self.max_corr_dist > 0.0
            && self.max_iters > 0
            && self.trans_tol > 0.0
            && self.rot_tol > 0.0;
        if ok { Ok(()) } else { Err(format!("ICP parameters must be positive: {self:?}")) }
    }
}

/// Hash grid over target points for radius-bounded nearest neighbors.
struct NeighborGrid<'a> {
    points: &'a [Point3<f64>],
    cell: f64,
    cells: HashMap<[i64; 3], Vec<u32>>,
}

impl<'a> NeighborGrid<'a> {
    fn new(points: &'a [Point3<f64>], cell: f64) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i as u32);
        }
        Self { points, cell, cells }
    }

    fn key(p: &Point3<f64>, cell: f64) -> [i64; 3] {
        [(p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64]
    }

    /// Nearest point within `cell` distance; ties go to the lower index.
    fn nearest(&self, q: &Point3<f64>) -> Option<usize> {
        let [kx, ky, kz] = Self::key(q, self.cell);
        let mut best: Option<(f64, u32)> = None;
        let r2 = self.cell * self.cell;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(cell) = self.cells.get(&[kx + dx, ky + dy, kz + dz]) else { continue };
                    for &j in cell {
                        let d2 = (self.points[j as usize] - q).norm_squared();
                        if d2 <= r2 && best.is_none_or(|(bd, bj)| d2 < bd || (d2 == bd && j < bj)) {
                            best = Some((d2, j));
                        }
                    }
                }
            }
        }
        best.map(|(_, j)| j as usize)
    }
}

/// Least-squares rigid transform mapping `src[i]` onto `dst[i]` (Kabsch).
pub fn kabsch(src: &[Point3<f64>], dst: &[Point3<f64>]) -> RigidTransform {
    let n = src.len() as f64;
    let cs: Vector3<f64> = src.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n;
    let cd: Vector3<f64> = dst.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (d.coords - cd) * (s.coords - cs).transpose();
    }
    let r = nearest_rotation(&h);
    RigidTransform::new_unchecked(r, cd - r * cs)
}

/// Point-to-point ICP aligning `source` onto `target`, starting from `init`.
/// Returns `target_from_source`. Both inputs should already be downsampled.
pub fn align(
    source: &[Point3<f64>],
    target: &[Point3<f64>],
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<RigidTransform, LocalizationError> {
    let grid = NeighborGrid::new(target, params.max_corr_dist);
    let mut estimate = init.clone();
    for _ in 0..params.max_iters {
        let pairs: Vec<Option<(Point3<f64>, usize)>> = source
            .par_iter()
            .map(|p| {
                let q = estimate.apply(p);
                grid.nearest(&q).map(|j| (q, j))
            })
            .collect();
        let (moved, matched): (Vec<Point3<f64>>, Vec<Point3<f64>>) =
            pairs.into_iter().flatten().map(|(q, j)| (q, target[j])).unzip();
        if moved.len() < 3 {
            return Err(LocalizationError::IcpDiverged { correspondences: moved.len() });
        }
        let update = kabsch(&moved, &matched);
        estimate = update.compose(&estimate);
        if update.translation().norm() < params.trans_tol && update.rotation_angle() < params.rot_tol {
            break;
        }
    }
    Ok(estimate)
}

fn downsample(cloud: &LabeledPointCloud, voxel: f64, frame: usize) -> Result<Vec<Point3<f64>>, LocalizationError> {
    let pts = voxel_dedup(cloud, voxel).points().to_vec();
    if pts.len() < MIN_ICP_POINTS {
        return Err(LocalizationError::TooFewPoints { frame, points: pts.len(), required: MIN_ICP_POINTS });
    }
    Ok(pts)
}

/// Frame-to-frame odometry over lidar clouds, anchored at the raw pose of
/// frame 0. Relative motion is estimated in the lidar frame and conjugated
/// into the body frame with `body_from_lidar`; the initial guess for each
/// pair is the previous relative motion (constant velocity), identity for
/// the first pair.
///
/// This is a reduced KISS-ICP: fixed correspondence radius, no local map,
/// no robust kernel.
pub fn icp_odometry_loaded(
    clouds: &[LabeledPointCloud],
    raw: &[Pose],
    body_from_lidar: &RigidTransform,
    params: &IcpParams,
) -> Result<PoseSequence, LocalizationError> {
    params.validate().map_err(LocalizationError::InvalidParams)?;
    if clouds.len() != raw.len() {
        return Err(LocalizationError::LengthMismatch { clouds: clouds.len(), poses: raw.len() });
    }
    if raw.is_empty() {
        return Ok(PoseSequence::new(PoseSource::IcpOdometry, Vec::new()));
    }
    let sampled: Vec<Vec<Point3<f64>>> = clouds
        .par_iter()
        .enumerate()
        .map(|(i, c)| downsample(c, params.voxel, i))
        .collect::<Result<_, _>>()?;
    let lidar_from_body = body_from_lidar.inverse();
    let mut poses = vec![raw[0].clone()];
    let mut velocity = RigidTransform::identity();
    for k in 1..clouds.len() {
        // prev_lidar_from_cur_lidar
        let init = lidar_from_body.compose(&velocity).compose(body_from_lidar);
        let rel_lidar = align(&sampled[k], &sampled[k - 1], &init, params).map_err(|e| match e {
            LocalizationError::IcpDiverged { correspondences } => {
                log::warn!("ICP lost track at frame {k} ({correspondences} correspondences)");
                LocalizationError::IcpDiverged { correspondences }
            }
            other => other,
        })?;
        velocity = body_from_lidar.compose(&rel_lidar).compose(&lidar_from_body);
        let world = poses[k - 1].transform.compose(&velocity);
        poses.push(Pose::new(raw[k].timestamp, world));
    }
    Ok(PoseSequence::new(PoseSource::IcpOdometry, poses))
}

pub fn icp_odometry(bundle: &SequenceBundle, params: &IcpParams) -> Result<PoseSequence, LocalizationError> {
    let clouds = bundle.load_clouds()?;
    icp_odometry_loaded(&clouds, &bundle.poses(), &bundle.body_from_lidar, params)
}
