use serde::{Deserialize, Serialize};

use crate::geometry::{ImageBuffer, PixelFormat};

use super::CompositeError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlurParams {
    /// `c` in `sigma = c / distance`, pixel·meters.
    pub strength: f64,
    pub sigma_max: f64,
    /// Sigmas below this are treated as no blur.
    pub sigma_min_active: f64,
}

impl Default for BlurParams {
    fn default() -> Self {
        Self { strength: 2.0, sigma_max: 4.0, sigma_min_active: 0.3 }
    }
}

pub fn blur_sigma(distance: f64, p: &BlurParams) -> Result<f64, CompositeError> {
    if !(distance > 0.0) {
        return Err(CompositeError::NonPositiveDistance(distance));
    }
    let sigma = (p.strength / distance).min(p.sigma_max);
    Ok(if sigma < p.sigma_min_active { 0.0 } else { sigma })
}

/// `2·ceil(3σ) + 1`; 1 for σ = 0.
pub fn kernel_size(sigma: f64) -> usize {
    2 * (3.0 * sigma).ceil() as usize + 1
}

/// Normalized 1D Gaussian of [`kernel_size`] taps.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let r = (kernel_size(sigma) / 2) as isize;
    let w: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = w.iter().sum();
    w.into_iter().map(|v| v / sum).collect()
}

/// Separable convolution of a `channels`-interleaved f64 plane with border clamping.
fn convolve(data: &[f64], w: usize, h: usize, channels: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..channels {
                let mut acc = 0.0;
                for (k, &kw) in kernel.iter().enumerate() {
                    let xx = (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize;
                    acc += kw * data[(y * w + xx) * channels + c];
                }
                tmp[(y * w + x) * channels + c] = acc;
            }
        }
    }
    let mut out = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..channels {
                let mut acc = 0.0;
                for (k, &kw) in kernel.iter().enumerate() {
                    let yy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
                    acc += kw * tmp[(yy * w + x) * channels + c];
                }
                out[(y * w + x) * channels + c] = acc;
            }
        }
    }
    out
}

/// Gaussian blur of an object layer and its binary mask.
///
/// The mask becomes a soft alpha. Color is blurred premultiplied by the mask
/// and divided by the blurred mask again, so blending `alpha·color'`
/// equals blurring the masked color: edges fade instead of darkening toward
/// the black background of the render.
pub fn blur_object_layer(color: &ImageBuffer, mask: &[bool], sigma: f64) -> Result<(ImageBuffer, ImageBuffer), CompositeError> {
    let rgb = color.as_rgb8().ok_or(CompositeError::WrongFormat { expected: PixelFormat::Rgb8, got: color.format() })?;
    if mask.len() != color.pixel_count() {
        return Err(CompositeError::SizeMismatch { expected: color.dimensions(), got: (mask.len() as u32, 1) });
    }
    let (w, h) = (color.width() as usize, color.height() as usize);
    if sigma <= 0.0 {
        let alpha = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
        return Ok((color.clone(), ImageBuffer::gray8(color.width(), color.height(), alpha).expect("sized")));
    }
    let kernel = gaussian_kernel(sigma);
    let m: Vec<f64> = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let premul: Vec<f64> = rgb.iter().enumerate().map(|(i, &c)| c as f64 * m[i / 3]).collect();
    let bm = convolve(&m, w, h, 1, &kernel);
    let bc = convolve(&premul, w, h, 3, &kernel);
    let mut out = vec![0u8; rgb.len()];
    let mut alpha = vec![0u8; w * h];
    for i in 0..w * h {
        let a = bm[i];
        alpha[i] = (a * 255.0).round().clamp(0.0, 255.0) as u8;
        for c in 0..3 {
            out[3 * i + c] = if a > 1e-12 { (bc[3 * i + c] / a).round().clamp(0.0, 255.0) as u8 } else { rgb[3 * i + c] };
        }
    }
    Ok((
        ImageBuffer::rgb8(color.width(), color.height(), out).expect("sized"),
        ImageBuffer::gray8(color.width(), color.height(), alpha).expect("sized"),
    ))
}
