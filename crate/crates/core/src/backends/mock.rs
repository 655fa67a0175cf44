use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use image::Rgb;

use super::{BodyParser, InpaintRequest, Inpainter, ObjectSegmenter};
use crate::error::{check_dims, Error, Result};
use crate::maskops::{BinaryMask, Point, Rect};
use crate::raster::{self, RgbImage};
use crate::segmentation::LabelMap;
use crate::synthetic::Fixture;

/// Minimum share of identical pixels for an edited image to be recognised as
/// a registered subject.
const SIMILARITY_THRESHOLD: f64 = 0.5;

#[derive(Debug)]
struct Entry {
    image: RgbImage,
    labels: LabelMap,
    truth: Option<BinaryMask>,
}

/// Subject images with their known label maps and garment masks, keyed by
/// content hash.
///
/// Lookups first try an exact hash match. Failing that, the registered image
/// of the same dimensions sharing the most identical pixels is used, provided
/// at least half of the pixels agree; this lets try-on results (which only
/// differ inside garment regions) be re-parsed when compounding.
#[derive(Debug, Default)]
pub struct FixtureRegistry {
    entries: Vec<Entry>,
    by_hash: HashMap<String, usize>,
}

impl FixtureRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(
        &mut self,
        image: RgbImage,
        labels: LabelMap,
        truth: Option<BinaryMask>,
    ) -> Result<String> {
        check_dims(image.dimensions(), labels.dims())?;
        if let Some(t) = &truth {
            check_dims(image.dimensions(), t.dims())?;
        }
        let hash = raster::content_hash(&image);
        let entry = Entry {
            image,
            labels,
            truth,
        };
        match self.by_hash.get(&hash) {
            Some(&i) => self.entries[i] = entry,
            None => {
                self.by_hash.insert(hash.clone(), self.entries.len());
                self.entries.push(entry);
            }
        }
        Ok(hash)
    }

    pub fn register_fixture(&mut self, fixture: Fixture) -> Result<String> {
        self.register(fixture.image, fixture.labels, fixture.truth_garment_mask)
    }

    /// Loads `image.png`, `labels.png` + `labels.json` and, when present,
    /// `truth_garment_mask.png` from `dir`.
    pub fn load_dir(&mut self, dir: impl AsRef<Path>) -> Result<String> {
        let dir = dir.as_ref();
        let image = raster::load_rgb(dir.join("image.png"))?;
        let labels = LabelMap::load(dir.join("labels.png"))?;
        let truth_path = dir.join("truth_garment_mask.png");
        let truth = if truth_path.exists() {
            Some(BinaryMask::load(truth_path)?)
        } else {
            None
        };
        self.register(image, labels, truth)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn lookup(&self, image: &RgbImage) -> Option<&Entry> {
        let hash = raster::content_hash(image);
        if let Some(&i) = self.by_hash.get(&hash) {
            return Some(&self.entries[i]);
        }
        let total = image.as_raw().len() / 3;
        self.entries
            .iter()
            .filter(|e| e.image.dimensions() == image.dimensions())
            .map(|e| {
                let same = e
                    .image
                    .as_raw()
                    .chunks_exact(3)
                    .zip(image.as_raw().chunks_exact(3))
                    .filter(|(a, b)| a == b)
                    .count();
                (e, same)
            })
            .max_by_key(|&(_, same)| same)
            .filter(|&(_, same)| same as f64 >= SIMILARITY_THRESHOLD * total as f64)
            .map(|(e, _)| e)
    }
}

/// Deterministic stand-ins for the three model services.
#[derive(Debug, Clone)]
pub struct MockBackends {
    registry: Arc<FixtureRegistry>,
    delay: Duration,
}

impl MockBackends {
    pub fn new(registry: Arc<FixtureRegistry>) -> Self {
        Self {
            registry,
            delay: Duration::ZERO,
        }
    }

    /// Sleeps for `delay` inside every inpaint call, imitating real model latency.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

impl BodyParser for MockBackends {
    fn parse(&self, image: &RgbImage) -> Result<LabelMap> {
        self.registry
            .lookup(image)
            .map(|e| e.labels.clone())
            .ok_or_else(|| Error::UnknownFixture(raster::content_hash(image)))
    }
}

impl ObjectSegmenter for MockBackends {
    fn segment(&self, image: &RgbImage, points: &[Point], bbox: Rect) -> Result<BinaryMask> {
        if points.is_empty() {
            return Err(Error::InvalidArgument(
                "segment needs at least one point".into(),
            ));
        }
        let (w, h) = image.dimensions();
        let boxed = bbox.to_mask(w, h);
        match self.registry.lookup(image).and_then(|e| e.truth.as_ref()) {
            Some(truth) => truth.intersect(&boxed),
            None => Ok(boxed),
        }
    }
}

impl Inpainter for MockBackends {
    fn inpaint(&self, req: &InpaintRequest<'_>) -> Result<RgbImage> {
        check_dims(req.base.dimensions(), req.mask.dims())?;
        check_dims(req.base.dimensions(), req.edge_guidance.dims())?;
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        let fill = match req.reference {
            Some(reference) => raster::mean_color(reference, |_, _| true),
            None => raster::mean_color(req.base, |r, c| !req.mask.get(r, c)),
        }
        .unwrap_or(Rgb([0, 0, 0]));
        let mut out = req.base.clone();
        for (x, y, p) in out.enumerate_pixels_mut() {
            if req.mask.get(y, x) {
                *p = fill;
            }
        }
        Ok(out)
    }
}
