use nalgebra::Point3;

use crate::geometry::{RigidTransform, SemanticClassMap};
use crate::render::{Raycaster, TriangleMesh};

use super::scenario::{SynthScenario, TrackKind, TrackSpec, RAIL_HEIGHT};

/// Stencil of scene surfaces that carry no semantic class.
pub const BACKGROUND_STENCIL: u16 = u16::MAX;
pub const RAIL_WIDTH: f64 = 0.12;
const ARC_STEP: f64 = 2.0;

const GROUND_COLOR: [u8; 3] = [125, 115, 100];
const FAR_GROUND_COLOR: [u8; 3] = [90, 125, 70];
const RAIL_COLOR: [u8; 3] = [175, 175, 180];
const POLE_COLOR: [u8; 3] = [140, 140, 145];
const PLATFORM_COLOR: [u8; 3] = [185, 175, 155];

#[derive(Default)]
struct MeshBuilder {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[u32; 3]>,
}

impl MeshBuilder {
    fn quad(&mut self, a: Point3<f64>, b: Point3<f64>, c: Point3<f64>, d: Point3<f64>) {
        let i = self.vertices.len() as u32;
        self.vertices.extend([a, b, c, d]);
        self.triangles.push([i, i + 1, i + 2]);
        self.triangles.push([i, i + 2, i + 3]);
    }

    fn finish(self, color: [u8; 3], stencil: u16) -> TriangleMesh {
        TriangleMesh::new(self.vertices, self.triangles, color, stencil).expect("synthetic mesh is valid")
    }
}

fn stations(track: &TrackSpec, s0: f64, s1: f64) -> Vec<f64> {
    let n = match track.kind {
        TrackKind::Straight => 1,
        TrackKind::Arc => ((s1 - s0) / ARC_STEP).ceil().max(1.0) as usize,
    };
    (0..=n).map(|k| s0 + (s1 - s0) * k as f64 / n as f64).collect()
}

/// Horizontal strip between two lateral offsets at height `z`.
fn ribbon(b: &mut MeshBuilder, track: &TrackSpec, s0: f64, s1: f64, lat: [f64; 2], z: f64) {
    let st = stations(track, s0, s1);
    for w in st.windows(2) {
        b.quad(
            track.offset_point(w[0], lat[0], z),
            track.offset_point(w[1], lat[0], z),
            track.offset_point(w[1], lat[1], z),
            track.offset_point(w[0], lat[1], z),
        );
    }
}

/// Closed prism following the track between `s0` and `s1`.
fn track_box(b: &mut MeshBuilder, track: &TrackSpec, s0: f64, s1: f64, lat: [f64; 2], z: [f64; 2]) {
    let st = stations(track, s0, s1);
    let p = |s: f64, l: usize, h: usize| track.offset_point(s, lat[l], z[h]);
    for w in st.windows(2) {
        let (a, c) = (w[0], w[1]);
        b.quad(p(a, 0, 1), p(c, 0, 1), p(c, 1, 1), p(a, 1, 1));
        b.quad(p(a, 0, 0), p(a, 1, 0), p(c, 1, 0), p(c, 0, 0));
        b.quad(p(a, 0, 0), p(c, 0, 0), p(c, 0, 1), p(a, 0, 1));
        b.quad(p(a, 1, 0), p(a, 1, 1), p(c, 1, 1), p(c, 1, 0));
    }
    let (first, last) = (st[0], st[st.len() - 1]);
    b.quad(p(first, 0, 0), p(first, 0, 1), p(first, 1, 1), p(first, 1, 0));
    b.quad(p(last, 0, 0), p(last, 1, 0), p(last, 1, 1), p(last, 0, 1));
}

/// Analytic world of a scenario: meshes with class stencils plus the
/// calibration feature.
pub struct SynthWorld {
    pub raycaster: Raycaster,
    pub calibration_feature: Point3<f64>,
}

impl SynthWorld {
    pub fn build(scenario: &SynthScenario, classes: &SemanticClassMap) -> Self {
        let track = &scenario.track;
        let sc = &scenario.scene;
        let (s0, s1) = (-sc.extent, track.length + sc.extent);
        let hw = sc.near_ground_width;
        let mut meshes = Vec::new();

        let mut ground = MeshBuilder::default();
        ribbon(&mut ground, track, s0, s1, [-hw, hw], 0.0);
        meshes.push(ground.finish(GROUND_COLOR, classes.near_track_ground()));
        let mut far = MeshBuilder::default();
        ribbon(&mut far, track, s0, s1, [-6.0 * hw, -hw], 0.0);
        ribbon(&mut far, track, s0, s1, [hw, 6.0 * hw], 0.0);
        meshes.push(far.finish(FAR_GROUND_COLOR, BACKGROUND_STENCIL));

        let mut rails = MeshBuilder::default();
        let centers = std::iter::once(0.0).chain(sc.parallel_track_offset);
        for c in centers {
            for side in [-1.0, 1.0] {
                let mid = c + side * scenario.half_gauge;
                ribbon(&mut rails, track, s0, s1, [mid - RAIL_WIDTH / 2.0, mid + RAIL_WIDTH / 2.0], RAIL_HEIGHT);
            }
        }
        meshes.push(rails.finish(RAIL_COLOR, classes.track()));

        let f = sc.pole_footprint / 2.0;
        let mut poles = MeshBuilder::default();
        for p in &sc.poles {
            track_box(&mut poles, track, p.arclength - f, p.arclength + f, [p.lateral - f, p.lateral + f], [0.0, p.height]);
        }
        meshes.push(poles.finish(POLE_COLOR, classes.pole()));

        if !sc.platforms.is_empty() {
            let mut plat = MeshBuilder::default();
            for p in &sc.platforms {
                let lat = [p.lateral[0].min(p.lateral[1]), p.lateral[0].max(p.lateral[1])];
                track_box(&mut plat, track, p.start, p.end, lat, [0.0, p.height]);
            }
            meshes.push(plat.finish(PLATFORM_COLOR, classes.platform()));
        }

        let pole = sc.poles[0];
        let face = pole.lateral - pole.lateral.signum() * f;
        let a = track.offset_point(pole.arclength - f, face, pole.height);
        let b = track.offset_point(pole.arclength + f, face, pole.height);
        Self { raycaster: Raycaster::new(meshes), calibration_feature: nalgebra::center(&a, &b) }
    }

    /// Semantic class of a stencil, with background surfaces unlabeled.
    pub fn class_of(stencil: u16) -> u16 {
        if stencil == BACKGROUND_STENCIL {
            0
        } else {
            stencil
        }
    }
}

/// Ground-truth world-from-body pose at arc length `s`: on the centerline,
/// x along the tangent, z up.
pub fn true_body_pose(track: &TrackSpec, s: f64) -> RigidTransform {
    RigidTransform::from_yaw(track.heading(s), track.point(s).coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn rays_hit_expected_classes() {
        let sc = SynthScenario::standard();
        let classes = SemanticClassMap::standard();
        let w = SynthWorld::build(&sc, &classes);
        let cast = |o: [f64; 3], d: [f64; 3]| {
            let h = w.raycaster.intersect(&Point3::from(o), &Vector3::from(d)).unwrap();
            (h.t, SynthWorld::class_of(w.raycaster.mesh_of(h.triangle).stencil_id))
        };
        let (t, c) = cast([10.0, 0.7175, 3.0], [0.0, 0.0, -1.0]);
        assert_eq!(c, classes.track());
        assert!((t - (3.0 - RAIL_HEIGHT)).abs() < 1e-12);
        assert_eq!(cast([10.0, 0.0, 3.0], [0.0, 0.0, -1.0]).1, classes.near_track_ground());
        assert_eq!(cast([10.0, 30.0, 3.0], [0.0, 0.0, -1.0]).1, 0);
        assert_eq!(cast([100.0, -3.0, 1.0], [0.0, 0.0, -1.0]).1, classes.platform());
        let (t, c) = cast([20.0, 0.0, 3.0], [0.0, -1.0, 0.0]);
        assert_eq!(c, classes.pole());
        assert!((t - 3.35).abs() < 1e-12);
        assert_eq!(w.calibration_feature, Point3::new(235.0, -3.35, 7.0));
    }
}
