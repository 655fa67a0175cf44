//! Interfaces to the three external models: a body-part parser, a promptable
//! object segmenter and a reference-conditioned inpainter.
//!
//! Two implementations ship: deterministic fixture-backed mocks and JSON/HTTP
//! adapters for real model services.

mod config;
mod http;
mod mock;

use std::sync::Arc;

pub use config::{BackendConfig, BackendMode};
pub use http::{HttpBackends, HttpEndpoints};
pub use mock::{FixtureRegistry, MockBackends};

use crate::error::Result;
use crate::maskops::{BinaryMask, Point, Rect};
use crate::raster::RgbImage;
use crate::segmentation::LabelMap;

pub trait BodyParser: Send + Sync {
    fn parse(&self, image: &RgbImage) -> Result<LabelMap>;
}

pub trait ObjectSegmenter: Send + Sync {
    fn segment(&self, image: &RgbImage, points: &[Point], bbox: Rect) -> Result<BinaryMask>;
}

/// Everything an inpainting call receives.
#[derive(Debug, Clone, Copy)]
pub struct InpaintRequest<'a> {
    pub base: &'a RgbImage,
    pub mask: &'a BinaryMask,
    pub edge_guidance: &'a BinaryMask,
    pub reference: Option<&'a RgbImage>,
    pub prompt: &'a str,
}

pub trait Inpainter: Send + Sync {
    fn inpaint(&self, req: &InpaintRequest<'_>) -> Result<RgbImage>;
}

/// The set of model backends a pipeline runs against.
#[derive(Clone)]
pub struct Backends {
    pub parser: Arc<dyn BodyParser>,
    pub segmenter: Arc<dyn ObjectSegmenter>,
    pub inpainter: Arc<dyn Inpainter>,
}

impl Backends {
    pub fn new(
        parser: Arc<dyn BodyParser>,
        segmenter: Arc<dyn ObjectSegmenter>,
        inpainter: Arc<dyn Inpainter>,
    ) -> Self {
        Self {
            parser,
            segmenter,
            inpainter,
        }
    }

    pub fn mock(registry: Arc<FixtureRegistry>) -> Self {
        let m = Arc::new(MockBackends::new(registry));
        Self::new(m.clone(), m.clone(), m)
    }
}

impl std::fmt::Debug for Backends {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Backends { .. }")
    }
}
