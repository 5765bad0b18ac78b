use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{CameraModel, ImageBuffer, LabeledPointCloud, Pose};
use crate::ingest::{load_depth, load_image, save_depth, save_png, LightSpec};

use super::{Raycaster, RenderError};

/// Color, stencil mask and depth of one camera frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRender {
    pub color: ImageBuffer,
    pub mask: ImageBuffer,
    pub depth: ImageBuffer,
}

/// Lambert shading with the light's travel direction; both faces lit.
pub fn shade(base: [u8; 3], normal: &Vector3<f64>, view_dir: &Vector3<f64>, light: &LightSpec) -> [u8; 3] {
    let n = if normal.dot(view_dir) > 0.0 { -normal } else { *normal };
    let l = -Vector3::from(light.direction).normalize();
    let f = light.ambient + light.intensity * n.dot(&l).max(0.0);
    base.map(|c| (c as f64 * f).round().clamp(0.0, 255.0) as u8)
}

/// Casts one ray per pixel center through `(u, v) = (x, y)`. The ray
/// direction has unit camera-frame z, so the hit parameter is the depth.
pub fn render_frame(scene: &Raycaster, cam: &CameraModel, pose: &Pose, light: &LightSpec) -> FrameRender {
    let (w, h) = (cam.width as usize, cam.height as usize);
    let world_from_cam = cam.world_from_camera(pose);
    let origin = Point3::from(*world_from_cam.translation());
    let rows: Vec<(Vec<u8>, Vec<u16>, Vec<f32>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut color = vec![0u8; 3 * w];
            let mut mask = vec![0u16; w];
            let mut depth = vec![f32::INFINITY; w];
            for x in 0..w {
                let dir = world_from_cam.apply_vector(&cam.pixel_ray(x as f64, y as f64));
                if let Some(hit) = scene.intersect(&origin, &dir) {
                    let mesh = scene.mesh_of(hit.triangle);
                    let c = shade(mesh.base_color, &scene.normal(hit.triangle), &dir, light);
                    color[3 * x..3 * x + 3].copy_from_slice(&c);
                    mask[x] = mesh.stencil_id;
                    depth[x] = hit.t as f32;
                }
            }
            (color, mask, depth)
        })
        .collect();
    let mut color = Vec::with_capacity(3 * w * h);
    let mut mask = Vec::with_capacity(w * h);
    let mut depth = Vec::with_capacity(w * h);
    for (c, m, d) in rows {
        color.extend(c);
        mask.extend(m);
        depth.extend(d);
    }
    FrameRender {
        color: ImageBuffer::rgb8(cam.width, cam.height, color).expect("sized"),
        mask: ImageBuffer::label16(cam.width, cam.height, mask).expect("sized"),
        depth: ImageBuffer::depth32(cam.width, cam.height, depth).expect("sized"),
    }
}

pub fn frame_paths(dir: &Path, frame: usize) -> [PathBuf; 3] {
    [
        dir.join(format!("{frame:06}_color.png")),
        dir.join(format!("{frame:06}_mask.png")),
        dir.join(format!("{frame:06}_depth.bin")),
    ]
}

pub fn save_frame_render(render: &FrameRender, dir: &Path, frame: usize) -> Result<(), RenderError> {
    let [c, m, d] = frame_paths(dir, frame);
    save_png(&render.color, &c)?;
    save_png(&render.mask, &m)?;
    save_depth(&render.depth, &d)?;
    Ok(())
}

pub fn load_frame_render(dir: &Path, frame: usize) -> Result<FrameRender, RenderError> {
    let [c, m, d] = frame_paths(dir, frame);
    let render = FrameRender { color: load_image(&c)?, mask: crate::ingest::load_label_mask(&m)?, depth: load_depth(&d)? };
    if !render.color.same_size(&render.mask) || !render.color.same_size(&render.depth) {
        return Err(RenderError::InvalidMesh(format!("render buffers of frame {frame} differ in size")));
    }
    Ok(render)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionMode {
    Remove,
    #[default]
    Replace,
}

impl std::str::FromStr for OcclusionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "remove" => Ok(Self::Remove),
            "replace" => Ok(Self::Replace),
            _ => Err(format!("unknown occlusion mode `{s}`")),
        }
    }
}

pub const OCCLUSION_EPSILON: f64 = 1e-3;

/// Fate of one point under [`occlude_pointcloud`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Occlusion {
    Visible,
    /// Ray parameter of the occluding hit and the stencil of its mesh.
    Occluded { t: f64, stencil: u16 },
}

/// Tests the ray from the origin toward `p`: occluded when the nearest hit
/// is closer than `‖p‖·(1 − epsilon)`.
pub fn classify_point(scene: &Raycaster, p: &Point3<f64>, epsilon: f64) -> Occlusion {
    if p.coords == Vector3::zeros() {
        return Occlusion::Visible;
    }
    match scene.intersect(&Point3::origin(), &p.coords) {
        Some(hit) if hit.t < 1.0 - epsilon => Occlusion::Occluded { t: hit.t, stencil: scene.mesh_of(hit.triangle).stencil_id },
        _ => Occlusion::Visible,
    }
}

/// Drops or replaces points hidden behind virtual objects, casting from the
/// cloud's frame origin. `scene` must hold the occluding meshes in the
/// cloud's frame. Replaced points move to the hit and take the mesh stencil
/// as label; intensity is kept.
pub fn occlude_pointcloud(
    cloud: &LabeledPointCloud,
    scene: &Raycaster,
    mode: OcclusionMode,
    epsilon: f64,
) -> LabeledPointCloud {
    let fates: Vec<Occlusion> = cloud.points().par_iter().map(|p| classify_point(scene, p, epsilon)).collect();
    match mode {
        OcclusionMode::Remove => {
            let keep: Vec<usize> =
                fates.iter().enumerate().filter_map(|(i, f)| matches!(f, Occlusion::Visible).then_some(i)).collect();
            cloud.select(&keep)
        }
        OcclusionMode::Replace => {
            let mut points = cloud.points().to_vec();
            let mut labels = cloud.labels().to_vec();
            for (i, f) in fates.iter().enumerate() {
                if let Occlusion::Occluded { t, stencil } = *f {
                    points[i] = Point3::from(points[i].coords * t);
                    labels[i] = stencil;
                }
            }
            LabeledPointCloud::from_parts_unchecked(points, labels, cloud.intensity().map(<[f32]>::to_vec), cloud.frame())
        }
    }
}
