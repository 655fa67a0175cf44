//! Size-controllable virtual try-on.
//!
//! The engine replaces a garment in a shopper's photo with a catalog garment
//! drawn at a chosen size. Fit is expressed purely through the garment mask:
//! larger sizes grow the mask sideways and downward, smaller sizes crop it
//! from the bottom. Model inference (body parsing, promptable segmentation,
//! inpainting) sits behind the traits in [`backends`].

pub mod backends;
pub mod domain;
pub mod error;
pub mod exec;
pub mod maskops;
pub mod pipeline;
pub mod raster;
pub mod segmentation;
pub mod synthetic;

pub use backends::{BackendConfig, BackendMode, Backends, FixtureRegistry, MockBackends};
pub use domain::{
    size_delta, size_index, BodyRegion, GarmentLength, GarmentMetadata, GarmentType, SizeLabel,
    UserProfile,
};
pub use error::{Error, Result, Stage, TryOnError};
pub use exec::Exec;
pub use maskops::{BinaryMask, Fraction, Point, PointSet, Rect};
pub use pipeline::{
    continue_from, generate_garment, regular_fit_mask, remove_garment, size_adjusted_mask, try_on,
    try_on_cancellable, CancelToken, GarmentInput, PipelineConfig, Provenance, SizeAdjustment,
    TryOnResult,
};
pub use raster::RgbImage;
pub use segmentation::{
    body_mask, parts_for, select_segments, BodyPart, LabelMap, SegmentSelection, TorsoHalf,
};
