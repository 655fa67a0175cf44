//! Binary raster masks and the morphology the fit adjustments are built from.
//!
//! All coordinates are `(row, col)` with row 0 at the top. Dilation uses a
//! 5×5 square structuring element, so `n` iterations set every pixel within
//! Chebyshev distance `2n` of an originally set pixel.

use std::io::Cursor;

use image::{GrayImage, ImageFormat, Luma, Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::exec::Exec;

/// Side length of the square structuring element.
pub const KERNEL_SIZE: u32 = 5;
const KERNEL_RADIUS: usize = (KERNEL_SIZE / 2) as usize;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    // row-major, one byte per pixel, 0 or 1
    bits: Vec<u8>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BinaryMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("area", &self.area())
            .finish()
    }
}

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub min_row: u32,
    pub min_col: u32,
    pub max_row: u32,
    pub max_col: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub row: u32,
    pub col: u32,
}

pub type PointSet = Vec<Point>;

/// Exact fraction `num / den` with `0 <= num <= den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u32,
    pub den: u32,
}

impl Fraction {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::InvalidArgument(format!(
                "fraction {num}/{den} is outside [0, 1]"
            )));
        }
        Ok(Self { num, den })
    }

    pub const ZERO: Fraction = Fraction { num: 0, den: 1 };
    pub const ONE: Fraction = Fraction { num: 1, den: 1 };

    /// `floor(self * n)`.
    pub fn floor_mul(self, n: u32) -> u32 {
        ((self.num as u64 * n as u64) / self.den as u64) as u32
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Rect {
    pub fn new(min_row: u32, min_col: u32, max_row: u32, max_col: u32) -> Self {
        debug_assert!(min_row <= max_row && min_col <= max_col);
        Self {
            min_row,
            min_col,
            max_row,
            max_col,
        }
    }

    pub fn height(&self) -> u32 {
        self.max_row - self.min_row + 1
    }

    pub fn width(&self) -> u32 {
        self.max_col - self.min_col + 1
    }

    pub fn contains(&self, row: u32, col: u32) -> bool {
        (self.min_row..=self.max_row).contains(&row) && (self.min_col..=self.max_col).contains(&col)
    }

    /// The rectangle interior rasterized into a `width`×`height` mask, clipped to bounds.
    pub fn to_mask(&self, width: u32, height: u32) -> BinaryMask {
        BinaryMask::from_fn(width, height, |r, c| self.contains(r, c))
    }
}

impl Serialize for Rect {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.min_row, self.min_col, self.max_row, self.max_col].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rect {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [r0, c0, r1, c1] = <[u32; 4]>::deserialize(d)?;
        if r0 > r1 || c0 > c1 {
            return Err(serde::de::Error::custom("rect min exceeds max"));
        }
        Ok(Rect::new(r0, c0, r1, c1))
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.row, self.col].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [row, col] = <[u32; 2]>::deserialize(d)?;
        Ok(Point { row, col })
    }
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![0; width as usize * height as usize],
        }
    }

    pub fn full(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![1; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for r in 0..height {
            for c in 0..width {
                if f(r, c) {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    /// Builds a mask from row-major booleans.
    pub fn from_bools(width: u32, height: u32, values: &[bool]) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::InvalidArgument(format!(
                "expected {} values for a {width}x{height} mask, got {}",
                width as usize * height as usize,
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits: values.iter().map(|&b| b as u8).collect(),
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    fn idx(&self, row: u32, col: u32) -> usize {
        row as usize * self.width as usize + col as usize
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> bool {
        self.bits[self.idx(row, col)] != 0
    }

    #[inline]
    pub fn set(&mut self, row: u32, col: u32, value: bool) {
        let i = self.idx(row, col);
        self.bits[i] = value as u8;
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    /// Set pixels in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = Point> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0)
            .map(move |(i, _)| Point {
                row: (i / w) as u32,
                col: (i % w) as u32,
            })
    }

    fn row(&self, row: usize) -> &[u8] {
        let w = self.width as usize;
        &self.bits[row * w..(row + 1) * w]
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(u8, u8) -> u8) -> Result<BinaryMask> {
        check_dims(self.dims(), other.dims())?;
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersect(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a & (1 - b))
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| 1 - b).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| a <= b)
    }

    /// Keeps only pixels for which `keep(row, col)` holds.
    pub fn retain(&mut self, keep: impl Fn(u32, u32) -> bool) {
        let w = self.width as usize;
        for (i, b) in self.bits.iter_mut().enumerate() {
            if *b != 0 && !keep((i / w) as u32, (i % w) as u32) {
                *b = 0;
            }
        }
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| {
            Luma([if self.get(y, x) { 255 } else { 0 }])
        })
    }

    /// White on black, for storage alongside colour images.
    pub fn to_rgb(&self) -> RgbImage {
        RgbImage::from_fn(self.width, self.height, |x, y| {
            let v = if self.get(y, x) { 255 } else { 0 };
            Rgb([v, v, v])
        })
    }

    /// Any nonzero pixel counts as set.
    pub fn from_gray(img: &GrayImage) -> BinaryMask {
        BinaryMask {
            width: img.width(),
            height: img.height(),
            bits: img.as_raw().iter().map(|&v| (v != 0) as u8).collect(),
        }
    }

    /// Single-channel PNG, 0 = unset, 255 = set.
    pub fn to_png(&self) -> Vec<u8> {
        let mut out = Cursor::new(Vec::new());
        self.to_gray()
            .write_to(&mut out, ImageFormat::Png)
            .expect("png encoding into memory cannot fail");
        out.into_inner()
    }

    pub fn from_png(bytes: &[u8]) -> Result<BinaryMask> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
        Ok(BinaryMask::from_gray(&img.to_luma8()))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<BinaryMask> {
        let bytes = std::fs::read(path)?;
        Self::from_png(&bytes)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_png())?;
        Ok(())
    }
}

/// Tightest rectangle containing every set pixel.
pub fn bounding_box(mask: &BinaryMask) -> Result<Rect> {
    let w = mask.width as usize;
    let mut rows = (0..mask.height as usize).filter(|&r| mask.row(r).iter().any(|&b| b != 0));
    let min_row = rows.next().ok_or(Error::EmptyMask)?;
    let max_row = rows.next_back().unwrap_or(min_row);
    let mut min_col = w;
    let mut max_col = 0;
    for r in min_row..=max_row {
        let row = mask.row(r);
        if let Some(c) = row.iter().position(|&b| b != 0) {
            min_col = min_col.min(c);
            max_col = max_col.max(row.iter().rposition(|&b| b != 0).unwrap_or(c));
        }
    }
    Ok(Rect::new(
        min_row as u32,
        min_col as u32,
        max_row as u32,
        max_col as u32,
    ))
}

/// Dilation by a `KERNEL_SIZE` square, repeated `iterations` times.
pub fn dilate(mask: &BinaryMask, iterations: u32) -> BinaryMask {
    dilate_with(mask, iterations, Exec::default())
}

pub fn dilate_with(mask: &BinaryMask, iterations: u32, exec: Exec) -> BinaryMask {
    let radius = KERNEL_RADIUS * iterations as usize;
    if radius == 0 || mask.is_empty() {
        return mask.clone();
    }
    let w = mask.width as usize;
    let h = mask.height as usize;

    // Horizontal pass: sliding-window "any" via row prefix counts.
    let mut horiz = vec![0u8; w * h];
    exec.for_each_row(&mut horiz, w, |r, out| {
        let src = mask.row(r);
        let mut prefix = vec![0u32; w + 1];
        for c in 0..w {
            prefix[c + 1] = prefix[c] + src[c] as u32;
        }
        for (c, o) in out.iter_mut().enumerate() {
            let lo = c.saturating_sub(radius);
            let hi = (c + radius).min(w - 1);
            *o = (prefix[hi + 1] > prefix[lo]) as u8;
        }
    });

    // Vertical pass over column prefix counts.
    let mut col_prefix = vec![0u32; w * (h + 1)];
    for r in 0..h {
        let (done, rest) = col_prefix.split_at_mut((r + 1) * w);
        let prev = &done[r * w..];
        let next = &mut rest[..w];
        for c in 0..w {
            next[c] = prev[c] + horiz[r * w + c] as u32;
        }
    }
    let mut bits = vec![0u8; w * h];
    exec.for_each_row(&mut bits, w, |r, out| {
        let lo = r.saturating_sub(radius);
        let hi = (r + radius).min(h - 1);
        let top = &col_prefix[lo * w..(lo + 1) * w];
        let bottom = &col_prefix[(hi + 1) * w..(hi + 2) * w];
        for c in 0..w {
            out[c] = (bottom[c] > top[c]) as u8;
        }
    });
    BinaryMask {
        width: mask.width,
        height: mask.height,
        bits,
    }
}

/// Dilation that grows left, right and downward but never above the mask's top row.
pub fn directional_dilate(mask: &BinaryMask, iterations: u32) -> BinaryMask {
    directional_dilate_with(mask, iterations, Exec::default())
}

pub fn directional_dilate_with(mask: &BinaryMask, iterations: u32, exec: Exec) -> BinaryMask {
    let Ok(bbox) = bounding_box(mask) else {
        return mask.clone();
    };
    let mut out = dilate_with(mask, iterations, exec);
    let w = out.width as usize;
    out.bits[..bbox.min_row as usize * w].fill(0);
    out
}

/// Clears the bottom `floor(fraction * L)` rows of the mask's bounding box,
/// where `L` is the bounding-box height.
pub fn trim_bottom(mask: &BinaryMask, fraction: Fraction) -> BinaryMask {
    let Ok(bbox) = bounding_box(mask) else {
        return mask.clone();
    };
    let trimmed = fraction.floor_mul(bbox.height());
    let mut out = mask.clone();
    if trimmed == 0 {
        return out;
    }
    let w = out.width as usize;
    let first_cleared = (bbox.max_row + 1 - trimmed) as usize;
    out.bits[first_cleared * w..(bbox.max_row as usize + 1) * w].fill(0);
    out
}

/// Boundary pixels: set pixels with an unset 8-neighbor or lying on the image border.
pub fn contour_edges(mask: &BinaryMask) -> BinaryMask {
    contour_edges_with(mask, Exec::default())
}

pub fn contour_edges_with(mask: &BinaryMask, exec: Exec) -> BinaryMask {
    let w = mask.width as usize;
    let h = mask.height as usize;
    let mut bits = vec![0u8; w * h];
    exec.for_each_row(&mut bits, w, |r, out| {
        let row = mask.row(r);
        for c in 0..w {
            if row[c] == 0 {
                continue;
            }
            if r == 0 || c == 0 || r + 1 == h || c + 1 == w {
                out[c] = 1;
                continue;
            }
            let interior =
                (r - 1..=r + 1).all(|rr| mask.row(rr)[c - 1..=c + 1].iter().all(|&b| b != 0));
            out[c] = (!interior) as u8;
        }
    });
    BinaryMask {
        width: mask.width,
        height: mask.height,
        bits,
    }
}

/// Union of `left` and `right`, with the horizontal gap between them filled on
/// every row where both have set pixels.
pub fn bridge_horizontal(left: &BinaryMask, right: &BinaryMask) -> Result<BinaryMask> {
    let mut out = left.union(right)?;
    let w = out.width as usize;
    for r in 0..out.height as usize {
        let l = left.row(r).iter().rposition(|&b| b != 0);
        let rt = right.row(r).iter().position(|&b| b != 0);
        if let (Some(l), Some(rt)) = (l, rt) {
            if l + 1 < rt {
                out.bits[r * w + l + 1..r * w + rt].fill(1);
            }
        }
    }
    Ok(out)
}

/// Draws `count` pixels uniformly, with replacement, from the set pixels of `mask`.
pub fn sample_points(mask: &BinaryMask, count: usize, seed: u64) -> Result<PointSet> {
    let pool: Vec<Point> = mask.iter_set().collect();
    if pool.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| pool[rng.random_range(0..pool.len() as u64) as usize])
        .collect())
}
