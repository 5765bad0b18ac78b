use crate::geometry::{ImageBuffer, PixelFormat};

use super::CompositeError;

/// Integer shift applied for a sub-pixel offset (round half away from zero).
pub fn integer_shift(offset: (f64, f64)) -> (i64, i64) {
    (offset.0.round() as i64, offset.1.round() as i64)
}

/// Translates the object layer by the rounded offset; content leaving the
/// image is discarded and uncovered pixels become transparent.
pub fn compensate_offset(
    color: &ImageBuffer,
    alpha: &ImageBuffer,
    offset: (f64, f64),
) -> Result<(ImageBuffer, ImageBuffer), CompositeError> {
    if !offset.0.is_finite() || !offset.1.is_finite() {
        return Err(CompositeError::NonFiniteOffset);
    }
    let rgb = color.as_rgb8().ok_or(CompositeError::WrongFormat { expected: PixelFormat::Rgb8, got: color.format() })?;
    let a = alpha.as_gray8().ok_or(CompositeError::WrongFormat { expected: PixelFormat::Gray8, got: alpha.format() })?;
    if !color.same_size(alpha) {
        return Err(CompositeError::SizeMismatch { expected: color.dimensions(), got: alpha.dimensions() });
    }
    let (dx, dy) = integer_shift(offset);
    let (w, h) = (color.width() as i64, color.height() as i64);
    let mut out = vec![0u8; rgb.len()];
    let mut out_a = vec![0u8; a.len()];
    for y in 0..h {
        let ty = y + dy;
        if !(0..h).contains(&ty) {
            continue;
        }
        for x in 0..w {
            let tx = x + dx;
            if !(0..w).contains(&tx) {
                continue;
            }
            let (s, t) = ((y * w + x) as usize, (ty * w + tx) as usize);
            out[3 * t..3 * t + 3].copy_from_slice(&rgb[3 * s..3 * s + 3]);
            out_a[t] = a[s];
        }
    }
    Ok((
        ImageBuffer::rgb8(color.width(), color.height(), out).expect("sized"),
        ImageBuffer::gray8(color.width(), color.height(), out_a).expect("sized"),
    ))
}

/// `(α·o + (255 − α)·r) / 255` per channel, rounded half up in integers.
pub fn blend_channel(real: u8, object: u8, alpha: u8) -> u8 {
    let (r, o, a) = (real as u32, object as u32, alpha as u32);
    ((2 * (a * o + (255 - a) * r) + 255) / 510) as u8
}

pub fn composite_frame(real: &ImageBuffer, object: &ImageBuffer, alpha: &ImageBuffer) -> Result<ImageBuffer, CompositeError> {
    for other in [object, alpha] {
        if !real.same_size(other) {
            return Err(CompositeError::SizeMismatch { expected: real.dimensions(), got: other.dimensions() });
        }
    }
    let r = real.as_rgb8().ok_or(CompositeError::WrongFormat { expected: PixelFormat::Rgb8, got: real.format() })?;
    let o = object.as_rgb8().ok_or(CompositeError::WrongFormat { expected: PixelFormat::Rgb8, got: object.format() })?;
    let a = alpha.as_gray8().ok_or(CompositeError::WrongFormat { expected: PixelFormat::Gray8, got: alpha.format() })?;
    let out = r.iter().zip(o).enumerate().map(|(i, (&r, &o))| blend_channel(r, o, a[i / 3])).collect();
    Ok(ImageBuffer::rgb8(real.width(), real.height(), out).expect("sized"))
}
