//! The try-on chain: remove the garment currently worn, build a garment mask
//! sized to the selected fit, then inpaint the new garment into it.
//!
//! Size adjustment works on the step count `d = index(selected) - index(true)`:
//! `d > 0` grows the regular-fit mask sideways and downward by
//! `iterations_per_size_step * d` dilation iterations; `d < 0` trims
//! `floor(|d| / trim_denominator * L)` rows off the bottom of the mask, where
//! `L` is its height. At `|d| = 6` the mask disappears and no garment is drawn.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backends::{Backends, InpaintRequest};
use crate::domain::{size_delta, GarmentMetadata, SizeLabel, UserProfile};
use crate::error::{check_dims, AtStage, Error, Result, Stage, TryOnError};
use crate::maskops::{self, BinaryMask, Fraction, Point, Rect};
use crate::raster::{self, RgbImage};
use crate::segmentation::{self, LabelMap};

pub const DEFAULT_REMOVAL_PROMPT: &str = "a person, natural skin, plain clothing removed";
pub const DEFAULT_GENERATION_PROMPT: &str = "a person wearing the garment";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Symmetric dilation iterations applied to the selected body segments.
    pub regular_fit_iterations: u32,
    /// Dilation iterations per size step when the garment is larger than the true size.
    pub iterations_per_size_step: u32,
    /// Size steps at which the whole mask is trimmed away.
    pub trim_denominator: u32,
    /// Prompt points handed to the object segmenter.
    pub sample_point_count: usize,
    pub rng_seed: u64,
    pub removal_prompt: String,
    pub generation_prompt: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            regular_fit_iterations: 1,
            iterations_per_size_step: 5,
            trim_denominator: 6,
            sample_point_count: 4,
            rng_seed: 0,
            removal_prompt: DEFAULT_REMOVAL_PROMPT.to_string(),
            generation_prompt: DEFAULT_GENERATION_PROMPT.to_string(),
        }
    }
}

impl PipelineConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            rng_seed: seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations_per_size_step == 0
            || self.trim_denominator == 0
            || self.sample_point_count == 0
        {
            return Err(Error::InvalidArgument(
                "iterations_per_size_step, trim_denominator and sample_point_count must be >= 1"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Cooperative cancellation flag, checked between pipeline stages.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }

    fn check(&self) -> Result<()> {
        if self.is_cancelled() {
            Err(Error::Cancelled)
        } else {
            Ok(())
        }
    }
}

/// How the regular-fit mask was changed for the selected size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SizeAdjustment {
    Unchanged,
    Dilate {
        iterations: u32,
    },
    Trim {
        fraction: Fraction,
        rows: u32,
    },
    /// The trim removed the whole mask: the garment cannot be worn.
    Blank,
}

impl SizeAdjustment {
    pub fn for_delta(delta: i32, config: &PipelineConfig) -> SizeAdjustment {
        match delta {
            0 => SizeAdjustment::Unchanged,
            d if d > 0 => SizeAdjustment::Dilate {
                iterations: config.iterations_per_size_step * d as u32,
            },
            d => {
                let den = config.trim_denominator;
                let num = d.unsigned_abs().min(den);
                if num == den {
                    SizeAdjustment::Blank
                } else {
                    SizeAdjustment::Trim {
                        fraction: Fraction { num, den },
                        rows: 0,
                    }
                }
            }
        }
    }
}

/// Output of the garment remover.
#[derive(Debug, Clone)]
pub struct Removal {
    pub image: RgbImage,
    pub rough_mask: BinaryMask,
    pub refined_mask: BinaryMask,
    pub points: Vec<Point>,
    pub bbox: Rect,
    pub edges: BinaryMask,
}

/// Runs the inpainter and re-imposes `base` outside the mask so identity
/// outside the edited region never depends on backend behaviour.
fn inpaint_preserving(backends: &Backends, req: InpaintRequest<'_>) -> Result<RgbImage> {
    check_dims(req.base.dimensions(), req.mask.dims())?;
    if req.mask.is_empty() {
        return Ok(req.base.clone());
    }
    let out = backends.inpainter.inpaint(&req)?;
    if out.dimensions() != req.base.dimensions() {
        return Err(Error::BackendProtocol(format!(
            "inpainter returned {:?}, expected {:?}",
            out.dimensions(),
            req.base.dimensions()
        )));
    }
    Ok(raster::composite(req.base, &out, req.mask))
}

/// Erases the garment of the same body region that the subject currently wears.
pub fn remove_garment(
    image: &RgbImage,
    labels: &LabelMap,
    meta: GarmentMetadata,
    backends: &Backends,
    config: &PipelineConfig,
) -> Result<Removal> {
    check_dims(image.dimensions(), labels.dims())?;
    let rough_mask = segmentation::select_segments(labels, meta)?;
    let points = maskops::sample_points(&rough_mask, config.sample_point_count, config.rng_seed)?;
    let bbox = maskops::bounding_box(&rough_mask)?;
    let segmented = backends.segmenter.segment(image, &points, bbox)?;
    check_dims(image.dimensions(), segmented.dims())?;
    let (w, h) = image.dimensions();
    let refined_mask = segmented.intersect(&bbox.to_mask(w, h))?;
    let edges = maskops::contour_edges(&segmentation::body_mask(labels)?);
    let removed = inpaint_preserving(
        backends,
        InpaintRequest {
            base: image,
            mask: &refined_mask,
            edge_guidance: &edges,
            reference: None,
            prompt: &config.removal_prompt,
        },
    )?;
    Ok(Removal {
        image: removed,
        rough_mask,
        refined_mask,
        points,
        bbox,
        edges,
    })
}

pub fn regular_fit_mask(
    labels: &LabelMap,
    meta: GarmentMetadata,
    config: &PipelineConfig,
) -> Result<BinaryMask> {
    let segments = segmentation::select_segments(labels, meta)?;
    Ok(maskops::dilate(&segments, config.regular_fit_iterations))
}

/// Adjusts the regular-fit mask for a garment `selected` on a subject of size `user`.
pub fn size_adjusted_mask(
    regular: &BinaryMask,
    user: SizeLabel,
    selected: SizeLabel,
    config: &PipelineConfig,
) -> (BinaryMask, SizeAdjustment) {
    let adjustment = SizeAdjustment::for_delta(size_delta(user, selected), config);
    match adjustment {
        SizeAdjustment::Unchanged => (regular.clone(), adjustment),
        SizeAdjustment::Dilate { iterations } => {
            (maskops::directional_dilate(regular, iterations), adjustment)
        }
        SizeAdjustment::Trim { fraction, .. } => {
            let rows = maskops::bounding_box(regular)
                .map(|b| fraction.floor_mul(b.height()))
                .unwrap_or(0);
            (
                maskops::trim_bottom(regular, fraction),
                SizeAdjustment::Trim { fraction, rows },
            )
        }
        SizeAdjustment::Blank => (
            BinaryMask::new(regular.width(), regular.height()),
            adjustment,
        ),
    }
}

/// Paints the garment shown in `garment_image` into `mask`, guided by the mask contour.
pub fn generate_garment(
    base: &RgbImage,
    mask: &BinaryMask,
    garment_image: &RgbImage,
    backends: &Backends,
    config: &PipelineConfig,
) -> Result<RgbImage> {
    check_dims(base.dimensions(), mask.dims())?;
    let edges = maskops::contour_edges(mask);
    inpaint_preserving(
        backends,
        InpaintRequest {
            base,
            mask,
            edge_guidance: &edges,
            reference: Some(garment_image),
            prompt: &config.generation_prompt,
        },
    )
}

/// A garment as the pipeline needs it.
#[derive(Debug, Clone, Copy)]
pub struct GarmentInput<'a> {
    pub id: &'a str,
    pub meta: GarmentMetadata,
    pub image: &'a RgbImage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub garment_id: String,
    pub meta: GarmentMetadata,
    pub selected_size: SizeLabel,
    pub true_size: SizeLabel,
    pub delta: i32,
    pub adjustment: SizeAdjustment,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct TryOnResult {
    pub image: RgbImage,
    pub rough_mask: BinaryMask,
    pub refined_mask: BinaryMask,
    pub removed_image: RgbImage,
    pub regular_mask: BinaryMask,
    pub adjusted_mask: BinaryMask,
    pub removal_edges: BinaryMask,
    pub generation_edges: BinaryMask,
    pub provenance: Provenance,
}

impl TryOnResult {
    /// Pixels the pipeline was allowed to change.
    pub fn change_region(&self) -> BinaryMask {
        self.refined_mask
            .union(&self.adjusted_mask)
            .expect("pipeline masks share dimensions")
    }
}

/// Full chain for one garment at one selected size.
pub fn try_on(
    base: &RgbImage,
    profile: &UserProfile,
    garment: GarmentInput<'_>,
    selected: SizeLabel,
    backends: &Backends,
    config: &PipelineConfig,
) -> Result<TryOnResult, TryOnError> {
    try_on_cancellable(
        base,
        profile,
        garment,
        selected,
        backends,
        config,
        &CancelToken::new(),
    )
}

pub fn try_on_cancellable(
    base: &RgbImage,
    profile: &UserProfile,
    garment: GarmentInput<'_>,
    selected: SizeLabel,
    backends: &Backends,
    config: &PipelineConfig,
    cancel: &CancelToken,
) -> Result<TryOnResult, TryOnError> {
    config.validate().at(Stage::Parse)?;
    cancel.check().at(Stage::Parse)?;
    let labels = backends.parser.parse(base).at(Stage::Parse)?;
    check_dims(base.dimensions(), labels.dims())
        .map_err(|e| Error::BackendProtocol(e.to_string()))
        .at(Stage::Parse)?;

    cancel.check().at(Stage::Remove)?;
    let removal =
        remove_garment(base, &labels, garment.meta, backends, config).at(Stage::Remove)?;

    cancel.check().at(Stage::RegularFit)?;
    let regular = regular_fit_mask(&labels, garment.meta, config).at(Stage::RegularFit)?;

    let true_size = profile.true_size_for(garment.meta.body_region());
    let (adjusted, adjustment) = size_adjusted_mask(&regular, true_size, selected, config);

    cancel.check().at(Stage::Generate)?;
    let generation_edges = maskops::contour_edges(&adjusted);
    let image = generate_garment(&removal.image, &adjusted, garment.image, backends, config)
        .at(Stage::Generate)?;

    Ok(TryOnResult {
        image,
        rough_mask: removal.rough_mask,
        refined_mask: removal.refined_mask,
        removed_image: removal.image,
        regular_mask: regular,
        adjusted_mask: adjusted,
        removal_edges: removal.edges,
        generation_edges,
        provenance: Provenance {
            garment_id: garment.id.to_string(),
            meta: garment.meta,
            selected_size: selected,
            true_size,
            delta: size_delta(true_size, selected),
            adjustment,
            seed: config.rng_seed,
        },
    })
}

/// The image the next try-on starts from when styling several garments.
pub fn continue_from(result: &TryOnResult) -> RgbImage {
    result.image.clone()
}
