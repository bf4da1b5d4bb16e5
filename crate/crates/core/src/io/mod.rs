//! On-disk formats: the RGBD dataset layout, binary PLY meshes, PFM float
//! maps and 8/16-bit PNG images.

mod dataset;
mod pfm;
mod ply;

use std::path::Path;

use image::{ImageBuffer, Luma, Rgb};

pub use dataset::{load_scene, write_scene};
pub use pfm::{read_pfm, write_pfm};
pub use ply::{export_mesh, import_mesh, parse_ply, ply_bytes};

use crate::error::{Error, Result};
use crate::grid::{Image, Mask};
use crate::numeric::Real;

#[inline]
pub(crate) fn to_u8<T: Real>(v: T) -> u8 {
    (v.as_f64().clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes an RGB image in `[0, 1]` as 8-bit PNG.
pub fn save_rgb_png<T: Real>(img: &Image<T>, path: impl AsRef<Path>) -> Result<()> {
    if img.channels() != 3 {
        return Err(Error::Shape(format!("expected 3 channels, got {}", img.channels())));
    }
    let bytes: Vec<u8> = img.data().iter().map(|&v| to_u8(v)).collect();
    let buf = ImageBuffer::<Rgb<u8>, _>::from_raw(img.width() as u32, img.height() as u32, bytes)
        .ok_or_else(|| Error::Shape("image buffer size".into()))?;
    buf.save(path)?;
    Ok(())
}

/// Reads any PNG as RGB in `[0, 1]`.
pub fn load_rgb_png<T: Real>(path: impl AsRef<Path>) -> Result<Image<T>> {
    let img = image::open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(|b| T::from_u8(b).expect("u8") / T::lit(255.0)).collect();
    Image::from_vec(w as usize, h as usize, 3, data)
}

/// Writes a mask as an 8-bit PNG (255 = set).
pub fn save_mask_png(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let buf = ImageBuffer::<Luma<u8>, _>::from_raw(mask.width() as u32, mask.height() as u32, bytes)
        .ok_or_else(|| Error::Shape("mask buffer size".into()))?;
    buf.save(path)?;
    Ok(())
}
