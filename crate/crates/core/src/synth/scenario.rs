use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::SynthError;

/// Rail top height above the ground plane; the track centerline lies at it.
pub const RAIL_HEIGHT: f64 = 0.18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackKind {
    Straight,
    /// Constant curvature, bending left.
    Arc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    pub kind: TrackKind,
    pub length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

impl TrackSpec {
    fn radius(&self) -> f64 {
        self.radius.unwrap_or(f64::INFINITY)
    }

    /// Centerline point at arc length `s`; defined beyond both ends too.
    pub fn point(&self, s: f64) -> Point3<f64> {
        match self.kind {
            TrackKind::Straight => Point3::new(s, 0.0, RAIL_HEIGHT),
            TrackKind::Arc => {
                let r = self.radius();
                let a = s / r;
                Point3::new(r * a.sin(), r * (1.0 - a.cos()), RAIL_HEIGHT)
            }
        }
    }

    pub fn heading(&self, s: f64) -> f64 {
        match self.kind {
            TrackKind::Straight => 0.0,
            TrackKind::Arc => s / self.radius(),
        }
    }

    pub fn left(&self, s: f64) -> Vector3<f64> {
        let h = self.heading(s);
        Vector3::new(-h.sin(), h.cos(), 0.0)
    }

    /// Point at arc length `s`, `lateral` meters to the left, height `z`.
    pub fn offset_point(&self, s: f64, lateral: f64, z: f64) -> Point3<f64> {
        let p = self.point(s) + self.left(s) * lateral;
        Point3::new(p.x, p.y, z)
    }

    /// Horizontal distance from `p` to the infinite centerline curve.
    pub fn lateral_distance(&self, p: &Point3<f64>) -> f64 {
        match self.kind {
            TrackKind::Straight => p.y.abs(),
            TrackKind::Arc => {
                let r = self.radius();
                ((p.x).hypot(p.y - r) - r).abs()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnssNoise {
    pub lateral_drift_amp: f64,
    pub drift_period: f64,
    pub white_sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleSpec {
    pub arclength: f64,
    pub lateral: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformSpec {
    pub start: f64,
    pub end: f64,
    /// Lateral offsets of the two long edges.
    pub lateral: [f64; 2],
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    /// The first pole carries the calibration feature on its top.
    pub poles: Vec<PoleSpec>,
    pub pole_footprint: f64,
    pub platforms: Vec<PlatformSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel_track_offset: Option<f64>,
    /// Scene geometry extends this far beyond both trajectory ends.
    pub extent: f64,
    /// Ground within this lateral distance is `near_track_ground`.
    pub near_ground_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LidarSpec {
    pub n_rays_h: u32,
    pub n_rays_v: u32,
    pub fov_up_deg: f64,
    pub fov_down_deg: f64,
    pub range: f64,
    pub noise_sigma: f64,
    /// Mount position in the body frame; the lidar axes are the body axes.
    pub mount: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub id: String,
    pub focal: f64,
    pub width: u32,
    pub height: u32,
    pub mount: [f64; 3],
    /// Downward tilt of the optical axis.
    pub pitch_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthScenario {
    pub name: String,
    pub track: TrackSpec,
    pub half_gauge: f64,
    pub speed: f64,
    pub n_frames: usize,
    pub gnss_noise: GnssNoise,
    pub scene: SceneSpec,
    pub lidar: LidarSpec,
    pub cameras: Vec<CameraSpec>,
    /// Seed of the sensor noise streams (lidar range, image texture).
    pub seed: u64,
}

impl SynthScenario {
    /// 200 m straight track, 100 frames, 0.5 m / 50 m sinusoidal GNSS drift
    /// with 0.05 m white noise, two 640×480 cameras.
    pub fn standard() -> Self {
        let mut poles = vec![PoleSpec { arclength: 235.0, lateral: -3.5, height: 7.0 }];
        poles.extend([20.0, 60.0, 140.0, 180.0, 260.0].map(|s| PoleSpec { arclength: s, lateral: -3.5, height: 7.0 }));
        poles.extend((0..7).map(|k| PoleSpec { arclength: 40.0 * k as f64, lateral: 7.5, height: 6.5 }));
        Self {
            name: "synth_straight".into(),
            track: TrackSpec { kind: TrackKind::Straight, length: 200.0, radius: None },
            half_gauge: 0.7175,
            speed: 20.0,
            n_frames: 100,
            gnss_noise: GnssNoise { lateral_drift_amp: 0.5, drift_period: 50.0, white_sigma: 0.05, seed: 42 },
            scene: SceneSpec {
                poles,
                pole_footprint: 0.3,
                platforms: vec![PlatformSpec { start: 80.0, end: 130.0, lateral: [-1.8, -5.5], height: 0.76 }],
                parallel_track_offset: Some(4.5),
                extent: 100.0,
                near_ground_width: 10.0,
            },
            lidar: LidarSpec {
                n_rays_h: 1536,
                n_rays_v: 32,
                fov_up_deg: 10.0,
                fov_down_deg: -25.0,
                range: 80.0,
                noise_sigma: 0.005,
                mount: [1.5, 0.0, 2.2],
            },
            cameras: vec![
                CameraSpec { id: "rgb_center".into(), focal: 600.0, width: 640, height: 480, mount: [2.0, 0.0, 2.6], pitch_deg: 5.0 },
                CameraSpec {
                    id: "rgb_highres_center".into(),
                    focal: 1000.0,
                    width: 640,
                    height: 480,
                    mount: [2.0, 0.1, 2.6],
                    pitch_deg: 5.0,
                },
            ],
            seed: 42,
        }
    }

    /// The standard scenario on a left-bending arc.
    pub fn arc(radius: f64) -> Self {
        let mut s = Self::standard();
        s.name = "synth_arc".into();
        s.track = TrackSpec { kind: TrackKind::Arc, length: 200.0, radius: Some(radius) };
        s
    }

    pub fn frame_spacing(&self) -> f64 {
        self.track.length / self.n_frames as f64
    }

    pub fn frame_arclength(&self, frame: usize) -> f64 {
        frame as f64 * self.frame_spacing()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidScenario(m.to_string()));
        if self.n_frames < 2 {
            return bad("n_frames must be at least 2");
        }
        let positive = [
            self.track.length,
            self.half_gauge,
            self.speed,
            self.gnss_noise.drift_period,
            self.scene.pole_footprint,
            self.scene.extent,
            self.scene.near_ground_width,
            self.lidar.range,
        ];
        if !positive.iter().all(|v| *v > 0.0 && v.is_finite()) {
            return bad("physical parameters must be positive");
        }
        if self.gnss_noise.lateral_drift_amp < 0.0 || self.gnss_noise.white_sigma < 0.0 || self.lidar.noise_sigma < 0.0 {
            return bad("noise parameters must be non-negative");
        }
        if self.track.kind == TrackKind::Arc && !self.track.radius.is_some_and(|r| r > 0.0) {
            return bad("arc track needs a positive radius");
        }
        if self.lidar.n_rays_h == 0 || self.lidar.n_rays_v < 2 || self.lidar.fov_up_deg <= self.lidar.fov_down_deg {
            return bad("lidar pattern is empty");
        }
        if self.cameras.is_empty() || self.cameras.iter().any(|c| c.focal <= 0.0 || c.width == 0 || c.height == 0) {
            return bad("need at least one valid camera");
        }
        if self.scene.poles.is_empty() {
            return bad("the first pole carries the calibration feature; none given");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arc_geometry() {
        let t = TrackSpec { kind: TrackKind::Arc, length: 200.0, radius: Some(100.0) };
        for s in [0.0, 10.0, 157.0] {
            let p = t.point(s);
            assert!(t.lateral_distance(&p) < 1e-12);
            assert!((t.lateral_distance(&t.offset_point(s, 0.7, 0.0)) - 0.7).abs() < 1e-9);
        }
        let d = t.point(1e-6) - t.point(0.0);
        assert!((d.normalize() - Vector3::x()).norm() < 1e-6);
    }

    #[test]
    fn standard_is_valid_and_round_trips() {
        let s = SynthScenario::standard();
        s.validate().unwrap();
        assert_eq!(s.frame_spacing(), 2.0);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<SynthScenario>(&text).unwrap(), s);
        let mut bad = s.clone();
        bad.n_frames = 1;
        assert!(bad.validate().is_err());
    }
}
