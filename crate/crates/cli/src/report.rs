//! JSON reports written next to CLI outputs.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sico_core::maskops::bounding_box;
use sico_core::{
    raster, BinaryMask, GarmentMetadata, Provenance, Rect, SizeAdjustment, SizeLabel, TryOnResult,
};

#[derive(Debug, Serialize)]
pub struct MaskStats {
    pub area: usize,
    /// `[min_row, min_col, max_row, max_col]`, null for an empty mask.
    pub bbox: Option<Rect>,
}

impl MaskStats {
    pub fn of(mask: &BinaryMask) -> Self {
        Self {
            area: mask.area(),
            bbox: bounding_box(mask).ok(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MaskReport {
    pub garment: GarmentMetadata,
    pub true_size: SizeLabel,
    pub size: SizeLabel,
    pub delta: i32,
    pub adjustment: SizeAdjustment,
    pub iterations: Option<u32>,
    /// `"num/den"` of the bounding-box height trimmed away.
    pub trim_fraction: Option<String>,
    pub trimmed_rows: Option<u32>,
    /// The selected size is too small to be drawn at all.
    pub impractical: bool,
    pub area: usize,
    pub bbox: Option<Rect>,
    pub regular_fit: MaskStats,
}

impl MaskReport {
    pub fn new(
        garment: GarmentMetadata,
        true_size: SizeLabel,
        size: SizeLabel,
        regular: &BinaryMask,
        adjusted: &BinaryMask,
        adjustment: SizeAdjustment,
    ) -> Self {
        let (iterations, trim_fraction, trimmed_rows) = match adjustment {
            SizeAdjustment::Dilate { iterations } => (Some(iterations), None, None),
            SizeAdjustment::Trim { fraction, rows } => (
                None,
                Some(format!("{}/{}", fraction.num, fraction.den)),
                Some(rows),
            ),
            SizeAdjustment::Blank => (
                None,
                Some("1/1".into()),
                bounding_box(regular).ok().map(|b| b.height()),
            ),
            SizeAdjustment::Unchanged => (None, None, None),
        };
        let stats = MaskStats::of(adjusted);
        Self {
            garment,
            true_size,
            size,
            delta: sico_core::size_delta(true_size, size),
            adjustment,
            iterations,
            trim_fraction,
            trimmed_rows,
            impractical: adjustment == SizeAdjustment::Blank,
            area: stats.area,
            bbox: stats.bbox,
            regular_fit: MaskStats::of(regular),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TryOnReport {
    pub out: PathBuf,
    /// SHA-256 over width, height and raw RGB bytes.
    pub hash: String,
    pub provenance: Provenance,
    pub impractical: bool,
    pub refined_mask: MaskStats,
    pub adjusted_mask: MaskStats,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub intermediates: Vec<PathBuf>,
}

impl TryOnReport {
    pub fn new(out: &Path, r: &TryOnResult, intermediates: Vec<PathBuf>) -> Self {
        Self {
            out: out.to_path_buf(),
            hash: raster::content_hash(&r.image),
            provenance: r.provenance.clone(),
            impractical: r.provenance.adjustment == SizeAdjustment::Blank,
            refined_mask: MaskStats::of(&r.refined_mask),
            adjusted_mask: MaskStats::of(&r.adjusted_mask),
            intermediates,
        }
    }
}
