use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{CameraModel, ImageBuffer, LabeledPointCloud, PixelFormat, Pose};

use super::SceneError;

/// How mask labels are transferred to points.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// Every visible point takes the label of its pixel.
    #[default]
    Direct,
    /// Points farther than `delta` meters behind the nearest point projecting
    /// into the same pixel are left alone.
    DepthAware { delta: f64 },
}

/// Copies per-pixel labels from `mask` onto world-frame points seen by `cam`
/// at `pose`. Points that already carry a label keep it.
pub fn label_points(
    cloud: &LabeledPointCloud,
    mask: &ImageBuffer,
    cam: &CameraModel,
    pose: &Pose,
    mode: LabelMode,
) -> Result<LabeledPointCloud, SceneError> {
    mask.expect_format(PixelFormat::Label16)?;
    if mask.dimensions() != (cam.width, cam.height) {
        return Err(SceneError::SizeMismatch {
            expected: (cam.width, cam.height),
            got: mask.dimensions(),
        });
    }
    let cam_from_world = cam.camera_from_world(pose);
    let hits: Vec<Option<(u32, u32, f64)>> = cloud
        .points()
        .par_iter()
        .map(|p| {
            let pc = cam_from_world.apply(p);
            let proj = cam.project(&pc.coords).ok()?;
            let (x, y) = cam.pixel_of(proj.u, proj.v)?;
            Some((x, y, proj.depth))
        })
        .collect();

    let nearest = match mode {
        LabelMode::Direct => None,
        LabelMode::DepthAware { .. } => {
            let mut d = vec![f64::INFINITY; mask.pixel_count()];
            for &(x, y, z) in hits.iter().flatten() {
                let i = y as usize * cam.width as usize + x as usize;
                d[i] = d[i].min(z);
            }
            Some(d)
        }
    };

    let mut out = cloud.clone();
    let labels = out.labels_mut();
    for (i, hit) in hits.iter().enumerate() {
        let Some((x, y, z)) = *hit else { continue };
        if labels[i] != 0 {
            continue;
        }
        if let (LabelMode::DepthAware { delta }, Some(near)) = (mode, &nearest) {
            if z > near[y as usize * cam.width as usize + x as usize] + delta {
                continue;
            }
        }
        labels[i] = mask.label(x, y);
    }
    Ok(out)
}
