use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::geometry::{CloudFrame, LabeledPointCloud, Pose, SemanticClassMap, TrackCenterline};
use crate::ingest::{read_json, schema, write_json, TransformJson};

use super::scenario::{SynthScenario, RAIL_HEIGHT};
use super::world::true_body_pose;
use super::SynthError;

pub const TRUTH_JSON: &str = "truth.json";

/// Everything the generator knows exactly about a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub scenario: SynthScenario,
    pub poses: Vec<Pose>,
    pub calibration_feature: Point3<f64>,
}

#[derive(Serialize, Deserialize)]
struct TimedTransform {
    timestamp: f64,
    #[serde(flatten)]
    transform: TransformJson,
}

#[derive(Serialize, Deserialize)]
struct TruthJson {
    scenario: SynthScenario,
    calibration_feature: [f64; 3],
    poses: Vec<TimedTransform>,
}

impl GroundTruth {
    pub fn true_poses(scenario: &SynthScenario) -> Vec<Pose> {
        (0..scenario.n_frames)
            .map(|k| {
                let s = scenario.frame_arclength(k);
                Pose::new(s / scenario.speed, true_body_pose(&scenario.track, s))
            })
            .collect()
    }

    /// Densely sampled true centerline over the trajectory span.
    pub fn centerline(&self, step: f64) -> TrackCenterline {
        let end = self.scenario.frame_arclength(self.scenario.n_frames - 1);
        let n = (end / step).ceil().max(1.0) as usize;
        TrackCenterline::new((0..=n).map(|k| self.scenario.track.point(end * k as f64 / n as f64)).collect())
            .expect("distinct samples")
    }

    pub fn save(&self, path: &Path) -> Result<(), SynthError> {
        let doc = TruthJson {
            scenario: self.scenario.clone(),
            calibration_feature: self.calibration_feature.into(),
            poses: self
                .poses
                .iter()
                .map(|p| TimedTransform { timestamp: p.timestamp, transform: TransformJson::from_transform(&p.transform) })
                .collect(),
        };
        Ok(write_json(path, &doc)?)
    }

    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let doc: TruthJson = read_json(path)?;
        doc.scenario.validate()?;
        let poses = doc
            .poses
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let t = p.transform.to_transform().map_err(|e| schema(path, format!("poses[{i}]"), e))?;
                Ok(Pose::new(p.timestamp, t))
            })
            .collect::<Result<Vec<_>, crate::ingest::IngestError>>()?;
        Ok(Self { scenario: doc.scenario, poses, calibration_feature: doc.calibration_feature.into() })
    }
}

/// World-frame `track`-labeled points sampled every `spacing` meters along
/// both ego rails (and the parallel track, if any), over the trajectory
/// span extended by `margin` on both ends.
pub fn rail_points(scenario: &SynthScenario, spacing: f64, margin: f64, classes: &SemanticClassMap) -> LabeledPointCloud {
    let end = scenario.frame_arclength(scenario.n_frames - 1) + margin;
    let n = ((end + margin) / spacing).floor() as usize;
    let mut cloud = LabeledPointCloud::empty(CloudFrame::World, false);
    let centers = std::iter::once(0.0).chain(scenario.scene.parallel_track_offset);
    for c in centers {
        for side in [-1.0, 1.0] {
            let lat = c + side * scenario.half_gauge;
            for k in 0..=n {
                let s = -margin + k as f64 * spacing;
                cloud.push(scenario.track.offset_point(s, lat, RAIL_HEIGHT), classes.track(), None);
            }
        }
    }
    cloud
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let sc = SynthScenario::arc(100.0);
        let truth =
            GroundTruth { poses: GroundTruth::true_poses(&sc), scenario: sc, calibration_feature: Point3::new(1.0, 2.0, 3.0) };
        let p = dir.path().join(TRUTH_JSON);
        truth.save(&p).unwrap();
        assert_eq!(GroundTruth::load(&p).unwrap(), truth);
        let c = truth.centerline(0.5);
        assert!(c.vertices().iter().all(|v| truth.scenario.track.lateral_distance(v) < 1e-9));
    }

    #[test]
    fn rail_points_sit_on_rails() {
        let sc = SynthScenario::standard();
        let cloud = rail_points(&sc, 0.5, 2.0, &SemanticClassMap::standard());
        assert!(cloud.points().iter().all(|p| {
            let d = p.y.abs();
            (d - 0.7175).abs() < 1e-12 || ((p.y - 4.5).abs() - 0.7175).abs() < 1e-12
        }));
    }
}
