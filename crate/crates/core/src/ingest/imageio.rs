use std::fs;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use super::{ply::write_atomic, IngestError};
use crate::geometry::{ImageBuffer, PixelData, PixelFormat};

fn image_err(path: &Path, message: impl ToString) -> IngestError {
    IngestError::Image { path: path.to_path_buf(), message: message.to_string() }
}

/// Loads an 8-bit RGB/gray or 16-bit gray PNG. RGBA is flattened to RGB by
/// dropping alpha.
pub fn load_image(path: &Path) -> Result<ImageBuffer, IngestError> {
    if !path.exists() {
        return Err(IngestError::MissingFile { path: path.to_path_buf() });
    }
    let img = image::open(path).map_err(|e| image_err(path, e))?;
    let (w, h) = (img.width(), img.height());
    let data = match img {
        DynamicImage::ImageRgb8(b) => PixelData::Rgb8(b.into_raw()),
        DynamicImage::ImageRgba8(b) => PixelData::Rgb8(DynamicImage::ImageRgba8(b).to_rgb8().into_raw()),
        DynamicImage::ImageLuma8(b) => PixelData::Gray8(b.into_raw()),
        DynamicImage::ImageLuma16(b) => PixelData::Label16(b.into_raw()),
        other => return Err(image_err(path, format!("unsupported pixel layout {:?}", other.color()))),
    };
    ImageBuffer::new(w, h, data).map_err(|e| image_err(path, e))
}

/// Loads a label mask; 8-bit masks are widened to 16 bits.
pub fn load_label_mask(path: &Path) -> Result<ImageBuffer, IngestError> {
    let img = load_image(path)?;
    let (w, h) = img.dimensions();
    match img.into_data() {
        PixelData::Label16(d) => ImageBuffer::label16(w, h, d),
        PixelData::Gray8(d) => ImageBuffer::label16(w, h, d.into_iter().map(u16::from).collect()),
        _ => return Err(image_err(path, "label mask must be a gray PNG")),
    }
    .map_err(|e| image_err(path, e))
}

pub fn save_png(img: &ImageBuffer, path: &Path) -> Result<(), IngestError> {
    let (w, h) = img.dimensions();
    let dynimg = match img.data() {
        PixelData::Rgb8(d) => DynamicImage::ImageRgb8(image::RgbImage::from_raw(w, h, d.clone()).expect("sized")),
        PixelData::Gray8(d) => DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, d.clone()).expect("sized")),
        PixelData::Label16(d) => DynamicImage::ImageLuma16(
            image::ImageBuffer::<image::Luma<u16>, _>::from_raw(w, h, d.clone()).expect("sized"),
        ),
        PixelData::Depth32(_) => return Err(image_err(path, "depth images are stored with save_depth")),
    };
    let mut bytes = std::io::Cursor::new(Vec::new());
    dynimg.write_to(&mut bytes, ImageFormat::Png).map_err(|e| image_err(path, e))?;
    write_atomic(path, bytes.get_ref())
}

/// Raw depth: `u32 width`, `u32 height`, then row-major `f32`, all little-endian.
pub fn save_depth(img: &ImageBuffer, path: &Path) -> Result<(), IngestError> {
    img.expect_format(PixelFormat::Depth32).map_err(|e| image_err(path, e))?;
    let d = img.as_depth32().expect("checked");
    let mut buf = Vec::with_capacity(8 + 4 * d.len());
    buf.extend_from_slice(&img.width().to_le_bytes());
    buf.extend_from_slice(&img.height().to_le_bytes());
    for v in d {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &buf)
}

pub fn load_depth(path: &Path) -> Result<ImageBuffer, IngestError> {
    if !path.exists() {
        return Err(IngestError::MissingFile { path: path.to_path_buf() });
    }
    let b = fs::read(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    if b.len() < 8 {
        return Err(image_err(path, "depth file shorter than its header"));
    }
    let w = u32::from_le_bytes(b[0..4].try_into().expect("4 bytes"));
    let h = u32::from_le_bytes(b[4..8].try_into().expect("4 bytes"));
    let body = &b[8..];
    if body.len() != 4 * w as usize * h as usize {
        return Err(image_err(path, format!("expected {}x{} floats", w, h)));
    }
    let data = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    ImageBuffer::depth32(w, h, data).map_err(|e| image_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let rgb = ImageBuffer::rgb8(2, 2, (0..12).collect()).unwrap();
        let lab = ImageBuffer::label16(3, 1, vec![0, 300, 65535]).unwrap();
        let gray = ImageBuffer::gray8(1, 2, vec![7, 250]).unwrap();
        for (img, name) in [(&rgb, "rgb.png"), (&lab, "lab.png"), (&gray, "gray.png")] {
            let p = dir.path().join(name);
            save_png(img, &p).unwrap();
            assert_eq!(&load_image(&p).unwrap(), img);
        }
        let widened = load_label_mask(&dir.path().join("gray.png")).unwrap();
        assert_eq!(widened.as_label16().unwrap(), &[7, 250]);
    }

    #[test]
    fn depth_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let d = ImageBuffer::depth32(2, 1, vec![5.25, f32::INFINITY]).unwrap();
        let p = dir.path().join("d.bin");
        save_depth(&d, &p).unwrap();
        assert_eq!(load_depth(&p).unwrap(), d);
        assert_eq!(fs::read(&p).unwrap().len(), 16);
    }
}
