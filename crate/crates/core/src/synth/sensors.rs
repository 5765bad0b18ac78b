use nalgebra::{Matrix3, Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{CameraModel, CloudFrame, ImageBuffer, LabeledPointCloud, PixelData, Pose, RigidTransform};
use crate::ingest::LightSpec;
use crate::render::render_frame;

use super::scenario::{CameraSpec, GnssNoise, LidarSpec, SynthScenario};
use super::world::SynthWorld;

/// Independent noise streams; each frame gets its own stream per purpose.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Gnss = 1,
    Lidar = 2,
    Image = 3,
}

pub(crate) fn frame_rng(seed: u64, stream: Stream, frame: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((stream as u64) << 56));
    rng.set_stream(frame as u64);
    rng
}

pub fn body_from_lidar(spec: &LidarSpec) -> RigidTransform {
    RigidTransform::from_translation(spec.mount[0], spec.mount[1], spec.mount[2])
}

/// Camera looking along body x, tilted down by `pitch_deg`.
pub fn camera_model(spec: &CameraSpec) -> CameraModel {
    let axes = Matrix3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0);
    let tilt = RigidTransform::from_euler(0.0, spec.pitch_deg.to_radians(), 0.0, Vector3::zeros());
    let r = tilt.rotation() * axes;
    let t = RigidTransform::new_reorthonormalized(r, Vector3::from(spec.mount), 1e-9).expect("rotation");
    CameraModel::new(
        spec.focal,
        spec.focal,
        spec.width as f64 / 2.0,
        spec.height as f64 / 2.0,
        spec.width,
        spec.height,
        t,
    )
    .expect("valid camera")
}

/// Unit ray directions of the scan pattern in the lidar frame, row-major
/// from the top beam.
pub fn lidar_directions(spec: &LidarSpec) -> Vec<Vector3<f64>> {
    let (up, down) = (spec.fov_up_deg.to_radians(), spec.fov_down_deg.to_radians());
    let mut dirs = Vec::with_capacity((spec.n_rays_h * spec.n_rays_v) as usize);
    for j in 0..spec.n_rays_v {
        let el = up + (down - up) * j as f64 / (spec.n_rays_v - 1) as f64;
        for i in 0..spec.n_rays_h {
            let az = std::f64::consts::TAU * i as f64 / spec.n_rays_h as f64;
            dirs.push(Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()));
        }
    }
    dirs
}

/// Lidar-frame scan with optional Gaussian range noise. Coordinates are
/// rounded to `f32`, the precision the PLY files store. Labels are left
/// unlabeled; intensity falls off with incidence angle.
pub fn scan(world: &SynthWorld, spec: &LidarSpec, world_from_lidar: &RigidTransform, rng: &mut ChaCha8Rng) -> LabeledPointCloud {
    let origin = Point3::from(*world_from_lidar.translation());
    let noise = (spec.noise_sigma > 0.0).then(|| Normal::new(0.0, spec.noise_sigma).expect("sigma"));
    let mut cloud = LabeledPointCloud::empty(CloudFrame::Lidar, true);
    for d in lidar_directions(spec) {
        let eps: f64 = noise.map_or(0.0, |n| n.sample(rng));
        let Some(hit) = world.raycaster.intersect(&origin, &world_from_lidar.apply_vector(&d)) else {
            continue;
        };
        let r = hit.t + eps;
        if r > spec.range || r <= 0.0 {
            continue;
        }
        let p = (d * r).map(|c| c as f32 as f64);
        let cos = world.raycaster.normal(hit.triangle).dot(&world_from_lidar.apply_vector(&d)).abs();
        cloud.push(Point3::from(p), 0, Some((0.2 + 0.8 * cos) as f32));
    }
    cloud
}

const SKY_TOP: [f64; 3] = [110.0, 150.0, 210.0];
const SKY_HORIZON: [f64; 3] = [200.0, 215.0, 230.0];
const TEXTURE_AMPLITUDE: i32 = 6;

/// Shaded camera image and semantic label mask of the scene.
pub fn camera_frame(
    world: &SynthWorld,
    cam: &CameraModel,
    pose: &Pose,
    light: &LightSpec,
    rng: &mut ChaCha8Rng,
) -> (ImageBuffer, ImageBuffer) {
    let render = render_frame(&world.raycaster, cam, pose, light);
    let (w, h) = (cam.width, cam.height);
    let PixelData::Rgb8(mut color) = render.color.into_data() else { unreachable!() };
    let PixelData::Label16(mut mask) = render.mask.into_data() else { unreachable!() };
    for (i, m) in mask.iter_mut().enumerate() {
        let px = &mut color[3 * i..3 * i + 3];
        if *m == 0 {
            let t = (i / w as usize) as f64 / h as f64;
            for c in 0..3 {
                px[c] = (SKY_TOP[c] + (SKY_HORIZON[c] - SKY_TOP[c]) * t).round() as u8;
            }
        } else {
            *m = SynthWorld::class_of(*m);
        }
        for c in px.iter_mut() {
            let n = rng.random_range(-TEXTURE_AMPLITUDE..=TEXTURE_AMPLITUDE);
            *c = (*c as i32 + n).clamp(0, 255) as u8;
        }
    }
    (
        ImageBuffer::rgb8(w, h, color).expect("sized"),
        ImageBuffer::label16(w, h, mask).expect("sized"),
    )
}

/// Sinusoidal lateral drift plus horizontal white noise on the position.
/// The heading follows the drifted path, turned by `atan(dℓ/ds)` about the
/// world z axis; roll and pitch stay exact.
pub fn corrupt_gnss(noise: &GnssNoise, scenario: &SynthScenario, frame: usize, truth: &RigidTransform) -> RigidTransform {
    let s = scenario.frame_arclength(frame);
    let phase = std::f64::consts::TAU * s / noise.drift_period;
    let drift = noise.lateral_drift_amp * phase.sin();
    let mut t = truth.translation() + scenario.track.left(s) * drift;
    let mut rotated = *truth;
    if noise.lateral_drift_amp != 0.0 {
        let slope = noise.lateral_drift_amp * std::f64::consts::TAU / noise.drift_period * phase.cos();
        rotated = RigidTransform::from_yaw(slope.atan(), Vector3::zeros()).compose(truth);
    }
    if noise.white_sigma > 0.0 {
        let n = Normal::new(0.0, noise.white_sigma).expect("sigma");
        let mut rng = frame_rng(noise.seed, Stream::Gnss, frame);
        t.x += n.sample(&mut rng);
        t.y += n.sample(&mut rng);
    }
    rotated.with_translation(t)
}
