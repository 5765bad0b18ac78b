//! Blending rendered objects into real frames: L*a*b* lightness matching,
//! distance-dependent Gaussian blur, integer offset compensation and alpha
//! compositing.

mod augment;
mod blend;
mod blur;
mod color;

pub use augment::{augment_frame, CompositeParams, FrameReport, LightnessScope, ObjectReport};
pub use blend::{blend_channel, compensate_offset, composite_frame, integer_shift};
pub use blur::{blur_object_layer, blur_sigma, gaussian_kernel, kernel_size, BlurParams};
pub use color::{
    lab_to_srgb, lab_to_srgb_keep_lightness, lightness, mask_bits, masked_lightness_stats, match_lightness, sequence_lightness_stats, srgb_to_lab,
    LightnessAccumulator, LightnessStats,
};

use crate::geometry::PixelFormat;

#[derive(Debug, thiserror::Error)]
pub enum CompositeError {
    #[error("no images to collect statistics from")]
    EmptyInput,
    #[error("mask selects no pixels")]
    EmptyMask,
    #[error("object distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("offset is not finite")]
    NonFiniteOffset,
    #[error("image is {got:?}, expected {expected:?}")]
    SizeMismatch { expected: (u32, u32), got: (u32, u32) },
    #[error("expected {expected:?} pixels, got {got:?}")]
    WrongFormat { expected: PixelFormat, got: PixelFormat },
}
