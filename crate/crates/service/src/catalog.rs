//! Garment catalog: a JSON array of records, image paths relative to the file.
//!
//! ```json
//! [{"id": "tee-red", "name": "Red Tee", "image": "images/tee-red.png",
//!   "type": "top", "length": "short", "sizes": ["S", "M", "L"]}]
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sico_core::{raster, GarmentLength, GarmentMetadata, GarmentType, RgbImage, SizeLabel};

use crate::error::CatalogError;

#[derive(Debug, Clone, Deserialize)]
struct CatalogEntry {
    id: String,
    name: String,
    image: PathBuf,
    #[serde(rename = "type")]
    garment_type: GarmentType,
    length: GarmentLength,
    sizes: Vec<SizeLabel>,
}

#[derive(Debug, Clone)]
pub struct GarmentRecord {
    pub id: String,
    pub name: String,
    pub image_path: PathBuf,
    pub metadata: GarmentMetadata,
    /// Sorted by size index, no duplicates.
    pub sizes: Vec<SizeLabel>,
    pub image: RgbImage,
}

impl GarmentRecord {
    pub fn offers(&self, size: SizeLabel) -> bool {
        self.sizes.contains(&size)
    }
}

/// Listing entry served by `GET /api/garments`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarmentListing {
    pub id: String,
    pub name: String,
    #[serde(rename = "type")]
    pub garment_type: GarmentType,
    pub length: GarmentLength,
    pub sizes: Vec<SizeLabel>,
    pub image_url: String,
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    garments: Vec<GarmentRecord>,
}

impl Catalog {
    /// Loads and validates the catalog. Fails on duplicate ids, empty size
    /// lists and garment images that are missing or do not decode.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, CatalogError> {
        let entries: Vec<CatalogEntry> = if text.trim().is_empty() {
            Vec::new()
        } else {
            serde_json::from_str(text)?
        };
        let mut seen = HashSet::new();
        let mut garments = Vec::with_capacity(entries.len());
        for e in entries {
            if !seen.insert(e.id.clone()) {
                return Err(CatalogError::DuplicateId(e.id));
            }
            let mut sizes = e.sizes;
            sizes.sort();
            sizes.dedup();
            if sizes.is_empty() {
                return Err(CatalogError::NoSizes(e.id));
            }
            let image_path = base_dir.join(&e.image);
            let image = raster::load_rgb(&image_path).map_err(|err| CatalogError::Image {
                id: e.id.clone(),
                message: format!("{}: {err}", image_path.display()),
            })?;
            garments.push(GarmentRecord {
                id: e.id,
                name: e.name,
                image_path,
                metadata: GarmentMetadata::new(e.garment_type, e.length),
                sizes,
                image,
            });
        }
        Ok(Self { garments })
    }

    pub fn get(&self, id: &str) -> Option<&GarmentRecord> {
        self.garments.iter().find(|g| g.id == id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &GarmentRecord> {
        self.garments.iter()
    }

    pub fn len(&self) -> usize {
        self.garments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.garments.is_empty()
    }
}
