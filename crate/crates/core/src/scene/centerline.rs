use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{LabeledPointCloud, Pose, TrackCenterline};

use super::SceneError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CenterlineParams {
    /// Maximum horizontal distance of a track point from the raw trajectory.
    pub gate_m: f64,
    pub bin_m: f64,
    /// Minimum points for a bin to emit a centroid.
    pub min_pts: usize,
    /// Width of the centered moving average over bin centroids.
    pub smooth_bins: usize,
}

impl Default for CenterlineParams {
    fn default() -> Self {
        Self { gate_m: 2.5, bin_m: 1.0, min_pts: 5, smooth_bins: 5 }
    }
}

/// Centerline of the ego track from `track`-labeled points.
///
/// Points are gated by their horizontal distance to the raw trajectory,
/// which drops parallel tracks, then binned by the arc length of their
/// projection onto it. Points projecting beyond either end of the trajectory
/// have no meaningful arc length and are skipped. Bin centroids are smoothed
/// with a centered moving average (truncated at the ends).
pub fn extract_centerline(
    cloud: &LabeledPointCloud,
    track_label: u16,
    raw_trajectory: &[Pose],
    params: &CenterlineParams,
) -> Result<TrackCenterline, SceneError> {
    let traj = TrackCenterline::from_points_dedup(raw_trajectory.iter().map(Pose::position))
        .map_err(|e| SceneError::DegenerateInput(format!("raw trajectory: {e}")))?;
    let length = traj.length();

    let mut bins: BTreeMap<i64, (Vector3<f64>, usize)> = BTreeMap::new();
    let mut kept = 0usize;
    for (p, &l) in cloud.points().iter().zip(cloud.labels()) {
        if l != track_label {
            continue;
        }
        let proj = traj.project_xy(p);
        if proj.distance > params.gate_m || proj.arclength <= 0.0 || proj.arclength >= length {
            continue;
        }
        kept += 1;
        let b = bins.entry((proj.arclength / params.bin_m).floor() as i64).or_insert((Vector3::zeros(), 0));
        b.0 += p.coords;
        b.1 += 1;
    }
    if kept < params.min_pts {
        return Err(SceneError::InsufficientTrackPoints { found: kept, required: params.min_pts });
    }

    let centroids: Vec<Vector3<f64>> = bins
        .values()
        .filter(|(_, n)| *n >= params.min_pts)
        .map(|(sum, n)| sum / *n as f64)
        .collect();
    let half = params.smooth_bins / 2;
    let smoothed = (0..centroids.len()).map(|k| {
        let lo = k.saturating_sub(half);
        let hi = (k + half).min(centroids.len() - 1);
        let sum: Vector3<f64> = centroids[lo..=hi].iter().sum();
        Point3::from(sum / (hi - lo + 1) as f64)
    });
    TrackCenterline::from_points_dedup(smoothed).map_err(|_| {
        SceneError::DegenerateInput(format!(
            "{kept} track points fill only {} bins of {} m with at least {} points each; need 2",
            centroids.len(),
            params.bin_m,
            params.min_pts
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CloudFrame, RigidTransform};

    fn straight_trajectory(len: f64) -> Vec<Pose> {
        (0..=20)
            .map(|i| {
                let x = len * i as f64 / 20.0;
                Pose::new(i as f64, RigidTransform::from_translation(x, 0.0, 2.0))
            })
            .collect()
    }

    fn rails(offsets: &[f64], len: f64) -> LabeledPointCloud {
        let mut pts = Vec::new();
        let mut x = 0.05;
        while x < len {
            for &y in offsets {
                pts.push(Point3::new(x, y, 0.15));
            }
            x += 0.1;
        }
        let n = pts.len();
        LabeledPointCloud::new(pts, vec![1; n], None, CloudFrame::World).unwrap()
    }

    #[test]
    fn symmetric_rails_give_zero_lateral() {
        let c = extract_centerline(&rails(&[-0.75, 0.75], 50.0), 1, &straight_trajectory(50.0), &CenterlineParams::default())
            .unwrap();
        assert!(c.vertices().iter().all(|v| v.y.abs() <= 1e-6));
        assert!(c.vertices().windows(2).all(|w| w[1].x > w[0].x));
    }

    #[test]
    fn parallel_track_is_gated_out() {
        let params = CenterlineParams::default();
        let ego = extract_centerline(&rails(&[-0.75, 0.75], 50.0), 1, &straight_trajectory(50.0), &params).unwrap();
        let both =
            extract_centerline(&rails(&[-0.75, 0.75, 3.75, 5.25], 50.0), 1, &straight_trajectory(50.0), &params).unwrap();
        assert_eq!(ego, both);
    }

    #[test]
    fn too_few_points() {
        let c = LabeledPointCloud::new(vec![Point3::new(1.0, 0.0, 0.0)], vec![1], None, CloudFrame::World).unwrap();
        assert!(matches!(
            extract_centerline(&c, 1, &straight_trajectory(10.0), &CenterlineParams::default()),
            Err(SceneError::InsufficientTrackPoints { found: 1, .. })
        ));
    }
}
