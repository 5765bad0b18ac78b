use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::ImageBuffer;
use crate::render::FrameRender;

use super::{blur_object_layer, blur_sigma, compensate_offset, composite_frame, integer_shift, match_lightness};
use super::{BlurParams, CompositeError, LightnessStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightnessScope {
    /// One target for the whole sequence.
    #[default]
    Sequence,
    /// Each frame matched to its own real image.
    Frame,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompositeParams {
    pub blur: BlurParams,
    pub lightness: LightnessScope,
    pub offset_compensation: bool,
    /// Also composite the calibration sphere, for visual review.
    pub include_calibration_sphere: bool,
}

impl Default for CompositeParams {
    fn default() -> Self {
        Self {
            blur: BlurParams::default(),
            lightness: LightnessScope::Sequence,
            offset_compensation: true,
            include_calibration_sphere: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectReport {
    pub stencil: u16,
    pub pixels: usize,
    /// Mean camera depth over the object's pixels, meters.
    pub distance: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub frame: usize,
    pub offset: [f64; 2],
    pub shift: [i64; 2],
    pub objects: Vec<ObjectReport>,
}

/// Composites the selected stencils of a render into the real frame.
///
/// Lightness is matched over all selected pixels jointly; each object is then
/// blurred with its own distance-dependent sigma, shifted by `offset`, and
/// blended from far to near.
pub fn augment_frame(
    frame: usize,
    real: &ImageBuffer,
    render: &FrameRender,
    layer: impl Fn(u16) -> bool,
    target: &LightnessStats,
    params: &CompositeParams,
    offset: (f64, f64),
) -> Result<(ImageBuffer, FrameReport), CompositeError> {
    if !real.same_size(&render.mask) {
        return Err(CompositeError::SizeMismatch { expected: real.dimensions(), got: render.mask.dimensions() });
    }
    let offset = if params.offset_compensation { offset } else { (0.0, 0.0) };
    let shift = integer_shift(offset);
    let mut report = FrameReport { frame, offset: [offset.0, offset.1], shift: [shift.0, shift.1], objects: Vec::new() };

    let mask = render.mask.as_label16().ok_or(CompositeError::WrongFormat {
        expected: crate::geometry::PixelFormat::Label16,
        got: render.mask.format(),
    })?;
    let depth = render.depth.as_depth32().ok_or(CompositeError::WrongFormat {
        expected: crate::geometry::PixelFormat::Depth32,
        got: render.depth.format(),
    })?;
    let mut per_stencil: BTreeMap<u16, (usize, f64)> = BTreeMap::new();
    for (&s, &d) in mask.iter().zip(depth) {
        if s != 0 && layer(s) {
            let e = per_stencil.entry(s).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += d as f64;
        }
    }
    if per_stencil.is_empty() {
        return Ok((real.clone(), report));
    }

    let layer_mask: Vec<u16> = mask.iter().map(|&s| if s != 0 && layer(s) { s } else { 0 }).collect();
    let layer_img = ImageBuffer::label16(real.width(), real.height(), layer_mask).expect("sized");
    let matched = match_lightness(&render.color, &layer_img, target)?;

    for (&stencil, &(pixels, sum)) in &per_stencil {
        let distance = sum / pixels as f64;
        report.objects.push(ObjectReport { stencil, pixels, distance, sigma: blur_sigma(distance, &params.blur)? });
    }
    let mut order: Vec<&ObjectReport> = report.objects.iter().collect();
    order.sort_by(|a, b| b.distance.total_cmp(&a.distance).then(a.stencil.cmp(&b.stencil)));

    let mut out = real.clone();
    for obj in order {
        let bits: Vec<bool> = mask.iter().map(|&s| s == obj.stencil).collect();
        let (color, alpha) = blur_object_layer(&matched, &bits, obj.sigma)?;
        let (color, alpha) = compensate_offset(&color, &alpha, offset)?;
        out = composite_frame(&out, &color, &alpha)?;
    }
    Ok((out, report))
}
