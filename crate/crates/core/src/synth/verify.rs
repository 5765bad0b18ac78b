use serde::Serialize;

use crate::geometry::{Pose, TrackCenterline};

use super::truth::GroundTruth;
use super::SynthError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterlineErrors {
    /// Horizontal distance of each vertex from the true centerline curve.
    pub lateral: Vec<f64>,
    pub mean_lateral: f64,
    pub max_lateral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoseErrors {
    /// Euclidean distance between estimated and true positions.
    pub position: Vec<f64>,
    /// Horizontal distance of each estimated position from the true track.
    pub lateral: Vec<f64>,
    pub mean_position: f64,
    pub mean_lateral: f64,
    pub max_lateral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct TruthReport {
    pub centerline: Option<CenterlineErrors>,
    pub poses: Option<PoseErrors>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Compares an extracted centerline and/or an estimated pose sequence with
/// the generator's ground truth.
pub fn verify_against_truth(
    truth: &GroundTruth,
    centerline: Option<&TrackCenterline>,
    poses: Option<&[Pose]>,
) -> Result<TruthReport, SynthError> {
    let track = &truth.scenario.track;
    let centerline = centerline.map(|c| {
        let lateral: Vec<f64> = c.vertices().iter().map(|v| track.lateral_distance(v)).collect();
        CenterlineErrors { mean_lateral: mean(&lateral), max_lateral: max(&lateral), lateral }
    });
    let poses = match poses {
        None => None,
        Some(p) if p.len() != truth.poses.len() => {
            return Err(SynthError::LengthMismatch { expected: truth.poses.len(), got: p.len() })
        }
        Some(p) => {
            let position: Vec<f64> =
                p.iter().zip(&truth.poses).map(|(e, t)| (e.position() - t.position()).norm()).collect();
            let lateral: Vec<f64> = p.iter().map(|e| track.lateral_distance(&e.position())).collect();
            Some(PoseErrors {
                mean_position: mean(&position),
                mean_lateral: mean(&lateral),
                max_lateral: max(&lateral),
                position,
                lateral,
            })
        }
    };
    Ok(TruthReport { centerline, poses })
}
