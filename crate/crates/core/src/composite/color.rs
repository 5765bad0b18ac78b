use std::sync::OnceLock;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{ImageBuffer, PixelFormat};

use super::CompositeError;

fn srgb_to_xyz() -> Matrix3<f64> {
    Matrix3::new(
        0.4124564, 0.3575761, 0.1804375, //
        0.2126729, 0.7151522, 0.0721750, //
        0.0193339, 0.1191920, 0.9503041,
    )
}

struct Tables {
    to_linear: [f64; 256],
    m: Matrix3<f64>,
    m_inv: Matrix3<f64>,
    white: Vector3<f64>,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut to_linear = [0.0; 256];
        for (i, v) in to_linear.iter_mut().enumerate() {
            let c = i as f64 / 255.0;
            *v = if c <= 0.04045 { c / 12.92 } else { ((c + 0.055) / 1.055).powf(2.4) };
        }
        let m = srgb_to_xyz();
        // white point taken from the matrix itself so sRGB white is exactly L = 100
        let white = m * Vector3::repeat(1.0);
        Tables { to_linear, m, m_inv: m.try_inverse().expect("invertible"), white }
    })
}

const DELTA: f64 = 6.0 / 29.0;

fn f(t: f64) -> f64 {
    if t > DELTA * DELTA * DELTA { t.cbrt() } else { t / (3.0 * DELTA * DELTA) + 4.0 / 29.0 }
}

fn f_inv(t: f64) -> f64 {
    if t > DELTA { t * t * t } else { 3.0 * DELTA * DELTA * (t - 4.0 / 29.0) }
}

fn linear_to_srgb8(v: f64) -> u8 {
    let v = v.clamp(0.0, 1.0);
    let c = if v <= 0.0031308 { 12.92 * v } else { 1.055 * v.powf(1.0 / 2.4) - 0.055 };
    (c * 255.0).round().clamp(0.0, 255.0) as u8
}

/// sRGB (D65) to CIE L*a*b*.
pub fn srgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let t = tables();
    let lin = Vector3::new(t.to_linear[rgb[0] as usize], t.to_linear[rgb[1] as usize], t.to_linear[rgb[2] as usize]);
    let xyz = t.m * lin;
    let (fx, fy, fz) = (f(xyz.x / t.white.x), f(xyz.y / t.white.y), f(xyz.z / t.white.z));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

fn lab_to_linear(lab: [f64; 3]) -> Vector3<f64> {
    let t = tables();
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let xyz = Vector3::new(f_inv(fx) * t.white.x, f_inv(fy) * t.white.y, f_inv(fz) * t.white.z);
    t.m_inv * xyz
}

fn in_gamut(lin: &Vector3<f64>) -> bool {
    lin.iter().all(|&c| (-1e-9..=1.0 + 1e-9).contains(&c))
}

fn linear_to_rgb8(lin: Vector3<f64>) -> [u8; 3] {
    [linear_to_srgb8(lin.x), linear_to_srgb8(lin.y), linear_to_srgb8(lin.z)]
}

/// CIE L*a*b* back to 8-bit sRGB, clamping out-of-gamut values.
pub fn lab_to_srgb(lab: [f64; 3]) -> [u8; 3] {
    linear_to_rgb8(lab_to_linear(lab))
}

/// Like [`lab_to_srgb`], but out-of-gamut colors keep their lightness: a*
/// and b* are scaled towards the neutral axis until the color fits.
pub fn lab_to_srgb_keep_lightness(lab: [f64; 3]) -> [u8; 3] {
    let l = lab[0].clamp(0.0, 100.0);
    let lin = lab_to_linear([l, lab[1], lab[2]]);
    if in_gamut(&lin) {
        return linear_to_rgb8(lin);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..40 {
        let k = 0.5 * (lo + hi);
        if in_gamut(&lab_to_linear([l, k * lab[1], k * lab[2]])) {
            lo = k;
        } else {
            hi = k;
        }
    }
    linear_to_rgb8(lab_to_linear([l, lo * lab[1], lo * lab[2]]))
}

/// Lightness of an 8-bit sRGB pixel.
pub fn lightness(rgb: [u8; 3]) -> f64 {
    srgb_to_lab(rgb)[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightnessStats {
    pub mean_l: f64,
    pub std_l: f64,
}

/// Running count, mean and squared deviation sum of L, merged in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
pub struct LightnessAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl LightnessAccumulator {
    fn from_values(values: impl Iterator<Item = f64> + Clone) -> Self {
        let (n, sum) = values.clone().fold((0u64, 0.0), |(n, s), v| (n + 1, s + v));
        if n == 0 {
            return Self::default();
        }
        let mean = sum / n as f64;
        let m2 = values.map(|v| (v - mean) * (v - mean)).sum();
        Self { n, mean, m2 }
    }

    fn merge(&mut self, o: &Self) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * self.n as f64 * o.n as f64 / n as f64;
        self.n = n;
    }

    /// Adds every pixel of an RGB8 image.
    pub fn add_image(&mut self, image: &ImageBuffer) -> Result<(), CompositeError> {
        let data = image.as_rgb8().ok_or(CompositeError::WrongFormat { expected: PixelFormat::Rgb8, got: image.format() })?;
        let ls: Vec<f64> = data.par_chunks_exact(3).map(|c| lightness([c[0], c[1], c[2]])).collect();
        self.merge(&Self::from_values(ls.iter().copied()));
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn finish(&self) -> Result<LightnessStats, CompositeError> {
        if self.n == 0 {
            return Err(CompositeError::EmptyInput);
        }
        Ok(LightnessStats { mean_l: self.mean, std_l: (self.m2 / self.n as f64).max(0.0).sqrt() })
    }
}

/// Mean and population standard deviation of L over all pixels of all images.
pub fn sequence_lightness_stats(images: &[ImageBuffer]) -> Result<LightnessStats, CompositeError> {
    let mut acc = LightnessAccumulator::default();
    for im in images {
        acc.add_image(im)?;
    }
    acc.finish()
}

/// Nonzero pixels of a GRAY8 or LABEL16 mask.
pub fn mask_bits(mask: &ImageBuffer) -> Result<Vec<bool>, CompositeError> {
    if let Some(d) = mask.as_label16() {
        Ok(d.iter().map(|&v| v != 0).collect())
    } else if let Some(d) = mask.as_gray8() {
        Ok(d.iter().map(|&v| v != 0).collect())
    } else {
        Err(CompositeError::WrongFormat { expected: PixelFormat::Label16, got: mask.format() })
    }
}

/// L statistics over the masked pixels of an RGB8 image.
pub fn masked_lightness_stats(image: &ImageBuffer, mask: &[bool]) -> Result<LightnessStats, CompositeError> {
    let data = image.as_rgb8().ok_or(CompositeError::WrongFormat { expected: PixelFormat::Rgb8, got: image.format() })?;
    let ls = data.chunks_exact(3).zip(mask).filter(|(_, &m)| m).map(|(c, _)| lightness([c[0], c[1], c[2]]));
    let acc = LightnessAccumulator::from_values(ls);
    if acc.n == 0 {
        return Err(CompositeError::EmptyMask);
    }
    acc.finish()
}

/// Affine remap of L on masked pixels so their statistics match `target`;
/// a and b are kept where the result stays in gamut, and unmasked pixels
/// are untouched.
pub fn match_lightness(
    synthetic: &ImageBuffer,
    mask: &ImageBuffer,
    target: &LightnessStats,
) -> Result<ImageBuffer, CompositeError> {
    if !synthetic.same_size(mask) {
        return Err(CompositeError::SizeMismatch { expected: synthetic.dimensions(), got: mask.dimensions() });
    }
    let bits = mask_bits(mask)?;
    let src = masked_lightness_stats(synthetic, &bits)?;
    let remap = |l: f64| {
        let v = if src.std_l < 1e-6 { l - src.mean_l + target.mean_l } else { (l - src.mean_l) * (target.std_l / src.std_l) + target.mean_l };
        v.clamp(0.0, 100.0)
    };
    let mut out = synthetic.clone();
    let data = out.as_rgb8_mut().expect("checked above");
    data.par_chunks_exact_mut(3).zip(bits.par_iter()).for_each(|(c, &m)| {
        if m {
            let [l, a, b] = srgb_to_lab([c[0], c[1], c[2]]);
            c.copy_from_slice(&lab_to_srgb_keep_lightness([remap(l), a, b]));
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference sRGB → L* with the published constants, written out directly.
    fn reference_l(v: u8) -> f64 {
        let c = v as f64 / 255.0;
        let lin = if c <= 0.04045 { c / 12.92 } else { ((c + 0.055) / 1.055).powf(2.4) };
        let y = lin; // gray: Y/Yn equals the linear value
        if y > 216.0 / 24389.0 { 116.0 * y.cbrt() - 16.0 } else { 24389.0 / 27.0 * y }
    }

    #[test]
    fn black_white_gray() {
        let lab = srgb_to_lab([0, 0, 0]);
        assert!(lab.iter().all(|v| v.abs() < 1e-12));
        let lab = srgb_to_lab([255, 255, 255]);
        assert!((lab[0] - 100.0).abs() < 1e-9 && lab[1].abs() < 1e-9 && lab[2].abs() < 1e-9);
        assert!((lightness([119, 119, 119]) - 50.0).abs() < 0.5);
        for v in [0u8, 5, 10, 50, 119, 200, 255] {
            assert!((lightness([v, v, v]) - reference_l(v)).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn round_trip_every_gray_and_samples() {
        for v in 0..=255u8 {
            assert_eq!(lab_to_srgb(srgb_to_lab([v, v, v])), [v, v, v]);
        }
        for c in [[255, 0, 0], [0, 255, 0], [0, 0, 255], [12, 200, 99], [250, 128, 3]] {
            assert_eq!(lab_to_srgb(srgb_to_lab(c)), c);
        }
    }

    #[test]
    fn sequence_stats() {
        let gray = |v: u8| ImageBuffer::rgb8(2, 2, vec![v; 12]).unwrap();
        let s = sequence_lightness_stats(&[gray(0), gray(0)]).unwrap();
        assert_eq!((s.mean_l, s.std_l), (0.0, 0.0));
        let s = sequence_lightness_stats(&[gray(255)]).unwrap();
        assert!((s.mean_l - 100.0).abs() < 1e-9 && s.std_l < 1e-9);
        let s = sequence_lightness_stats(&[gray(0), gray(255)]).unwrap();
        assert!((s.mean_l - 50.0).abs() < 1e-9 && (s.std_l - 50.0).abs() < 1e-9);
        assert!(matches!(sequence_lightness_stats(&[]), Err(CompositeError::EmptyInput)));
    }

    fn object_image() -> (ImageBuffer, ImageBuffer) {
        let (w, h) = (16u32, 8u32);
        let mut rgb = Vec::new();
        let mut mask = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let inside = (4..12).contains(&x);
                let v = if inside { (60 + 10 * x + 5 * y) as u8 } else { 30 };
                rgb.extend([v, v / 2 + 20, 255 - v]);
                mask.push(if inside { 16 } else { 0 });
            }
        }
        (ImageBuffer::rgb8(w, h, rgb).unwrap(), ImageBuffer::label16(w, h, mask).unwrap())
    }

    #[test]
    fn identity_target_keeps_image() {
        let (img, mask) = object_image();
        let own = masked_lightness_stats(&img, &mask_bits(&mask).unwrap()).unwrap();
        let out = match_lightness(&img, &mask, &own).unwrap();
        for (a, b) in img.as_rgb8().unwrap().iter().zip(out.as_rgb8().unwrap()) {
            assert!((*a as i32 - *b as i32).abs() <= 1);
        }
    }

    #[test]
    fn matched_stats_hit_target() {
        let (img, mask) = object_image();
        let target = LightnessStats { mean_l: 45.0, std_l: 6.0 };
        let out = match_lightness(&img, &mask, &target).unwrap();
        let got = masked_lightness_stats(&out, &mask_bits(&mask).unwrap()).unwrap();
        assert!((got.mean_l - target.mean_l).abs() < 0.5, "{got:?}");
        assert!((got.std_l - target.std_l).abs() < 0.5, "{got:?}");
        let bits = mask_bits(&mask).unwrap();
        for (i, (a, b)) in img.as_rgb8().unwrap().chunks(3).zip(out.as_rgb8().unwrap().chunks(3)).enumerate() {
            if !bits[i] {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn constant_object_shifts_uniformly() {
        let mut data = vec![100u8; 4 * 4 * 3];
        data[..3].copy_from_slice(&[7, 7, 7]);
        let img = ImageBuffer::rgb8(4, 4, data).unwrap();
        let mut m = vec![1u8; 16];
        m[0] = 0;
        let mask = ImageBuffer::gray8(4, 4, m).unwrap();
        let l0 = lightness([100, 100, 100]);
        let out = match_lightness(&img, &mask, &LightnessStats { mean_l: l0 + 20.0, std_l: 3.0 }).unwrap();
        let px: Vec<&[u8]> = out.as_rgb8().unwrap().chunks(3).collect();
        assert_eq!(px[0], &[7, 7, 7]);
        assert!(px[1..].iter().all(|p| *p == px[1]));
        assert!((lightness([px[1][0], px[1][1], px[1][2]]) - l0 - 20.0).abs() < 0.5);
        let empty = ImageBuffer::gray8(4, 4, vec![0; 16]).unwrap();
        assert!(matches!(match_lightness(&img, &empty, &LightnessStats { mean_l: 0.0, std_l: 0.0 }), Err(CompositeError::EmptyMask)));
    }

    #[test]
    fn saturated_color_keeps_lightness() {
        let [l, a, b] = srgb_to_lab([200, 30, 20]);
        for target in [10.0, 50.0, 85.0, 97.0] {
            let rgb = lab_to_srgb_keep_lightness([target, a, b]);
            assert!((lightness(rgb) - target).abs() < 0.5, "{target}: {rgb:?}");
        }
        let back = lab_to_srgb_keep_lightness([l, a, b]);
        assert_eq!(back, lab_to_srgb([l, a, b]));
    }
}
