//! RGB image helpers: PNG interchange, content hashing, letterboxing.

use std::io::Cursor;
use std::path::Path;

use image::{imageops, ImageFormat, ImageReader, Rgb};
use sha2::{Digest, Sha256};

pub use image::RgbImage;

use crate::error::{Error, Result};
use crate::maskops::BinaryMask;

pub fn encode_png(img: &RgbImage) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)
        .expect("png encoding into memory cannot fail");
    out.into_inner()
}

/// Decodes PNG or JPEG bytes into 8-bit RGB.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage> {
    let img = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()?
        .decode()?
        .to_rgb8();
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::InvalidImage("image has zero width or height".into()));
    }
    Ok(img)
}

/// Reads only the header to obtain `(width, height)`.
pub fn peek_dimensions(bytes: &[u8]) -> Result<(u32, u32)> {
    Ok(ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()?
        .into_dimensions()?)
}

pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    decode_image(&std::fs::read(path)?)
}

pub fn save_png(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_png(img))?;
    Ok(())
}

/// SHA-256 over the dimensions and raw RGB bytes, hex encoded.
pub fn content_hash(img: &RgbImage) -> String {
    let mut h = Sha256::new();
    h.update(img.width().to_le_bytes());
    h.update(img.height().to_le_bytes());
    h.update(img.as_raw());
    hex::encode(h.finalize())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Scales `img` to fit inside `width`×`height` preserving aspect ratio and
/// centres it on a black canvas. Images already at the canvas size are
/// returned unchanged.
pub fn letterbox(img: &RgbImage, width: u32, height: u32) -> RgbImage {
    if img.dimensions() == (width, height) {
        return img.clone();
    }
    let scale = f64::min(
        width as f64 / img.width() as f64,
        height as f64 / img.height() as f64,
    );
    let nw = ((img.width() as f64 * scale).round() as u32).clamp(1, width);
    let nh = ((img.height() as f64 * scale).round() as u32).clamp(1, height);
    let scaled = imageops::resize(img, nw, nh, imageops::FilterType::Triangle);
    let mut canvas = RgbImage::from_pixel(width, height, Rgb([0, 0, 0]));
    imageops::overlay(
        &mut canvas,
        &scaled,
        ((width - nw) / 2) as i64,
        ((height - nh) / 2) as i64,
    );
    canvas
}

/// Mean colour of the pixels selected by `keep`, rounded to nearest.
/// Returns `None` when nothing is selected.
pub fn mean_color(img: &RgbImage, keep: impl Fn(u32, u32) -> bool) -> Option<Rgb<u8>> {
    let mut sum = [0u64; 3];
    let mut n = 0u64;
    for (x, y, p) in img.enumerate_pixels() {
        if keep(y, x) {
            for k in 0..3 {
                sum[k] += p[k] as u64;
            }
            n += 1;
        }
    }
    (n > 0).then(|| Rgb(sum.map(|s| ((s + n / 2) / n) as u8)))
}

/// `generated` inside `mask`, `base` everywhere else.
pub fn composite(base: &RgbImage, generated: &RgbImage, mask: &BinaryMask) -> RgbImage {
    RgbImage::from_fn(base.width(), base.height(), |x, y| {
        if mask.get(y, x) {
            *generated.get_pixel(x, y)
        } else {
            *base.get_pixel(x, y)
        }
    })
}

/// Pixels where `a` and `b` differ.
pub fn diff_mask(a: &RgbImage, b: &RgbImage) -> Result<BinaryMask> {
    crate::error::check_dims(a.dimensions(), b.dimensions())?;
    Ok(BinaryMask::from_fn(a.width(), a.height(), |r, c| {
        a.get_pixel(c, r) != b.get_pixel(c, r)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_is_lossless() {
        let img = RgbImage::from_fn(5, 3, |x, y| Rgb([x as u8 * 40, y as u8 * 70, 7]));
        assert_eq!(decode_image(&encode_png(&img)).unwrap(), img);
        assert_eq!(peek_dimensions(&encode_png(&img)).unwrap(), (5, 3));
    }

    #[test]
    fn letterbox_identity_and_shape() {
        let img = RgbImage::from_pixel(4, 6, Rgb([9, 9, 9]));
        assert_eq!(letterbox(&img, 4, 6), img);
        let wide = RgbImage::from_pixel(20, 10, Rgb([200, 0, 0]));
        let out = letterbox(&wide, 10, 10);
        assert_eq!(out.dimensions(), (10, 10));
        assert_eq!(*out.get_pixel(5, 0), Rgb([0, 0, 0]));
        assert_eq!(*out.get_pixel(5, 5), Rgb([200, 0, 0]));
    }

    #[test]
    fn mean_color_rounds() {
        let mut img = RgbImage::from_pixel(2, 1, Rgb([0, 0, 0]));
        img.put_pixel(1, 0, Rgb([255, 1, 2]));
        assert_eq!(mean_color(&img, |_, _| true), Some(Rgb([128, 1, 1])));
        assert_eq!(mean_color(&img, |_, _| false), None);
    }

    #[test]
    fn hash_depends_on_dimensions() {
        let a = RgbImage::from_pixel(2, 3, Rgb([1, 1, 1]));
        let b = RgbImage::from_pixel(3, 2, Rgb([1, 1, 1]));
        assert_ne!(content_hash(&a), content_hash(&b));
        assert_eq!(content_hash(&a), content_hash(&a.clone()));
    }
}
