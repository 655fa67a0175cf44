//! Body-part label maps and the garment-region masks derived from them.
//!
//! A [`LabelMap`] carries one part id per pixel plus a table naming each id.
//! Part selection per garment follows a fixed lookup: tops take the upper arms
//! (plus lower arms when long-sleeved) and the upper half of the torso;
//! bottoms take the upper legs (plus lower legs when long) and the lower half
//! of the torso. Skirts additionally fill the gap between the two legs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Cursor;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{GarmentLength, GarmentMetadata, GarmentType};
use crate::error::{Error, Result};
use crate::maskops::{bounding_box, bridge_horizontal, BinaryMask};

/// Closed vocabulary of body parts. Parser adapters map their own part
/// schemes onto these names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyPart {
    Background,
    Head,
    Torso,
    UpperArmLeft,
    UpperArmRight,
    LowerArmLeft,
    LowerArmRight,
    UpperLegLeft,
    UpperLegRight,
    LowerLegLeft,
    LowerLegRight,
    HandLeft,
    HandRight,
    FootLeft,
    FootRight,
}

impl BodyPart {
    pub const ALL: [BodyPart; 15] = [
        BodyPart::Background,
        BodyPart::Head,
        BodyPart::Torso,
        BodyPart::UpperArmLeft,
        BodyPart::UpperArmRight,
        BodyPart::LowerArmLeft,
        BodyPart::LowerArmRight,
        BodyPart::UpperLegLeft,
        BodyPart::UpperLegRight,
        BodyPart::LowerLegLeft,
        BodyPart::LowerLegRight,
        BodyPart::HandLeft,
        BodyPart::HandRight,
        BodyPart::FootLeft,
        BodyPart::FootRight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BodyPart::Background => "background",
            BodyPart::Head => "head",
            BodyPart::Torso => "torso",
            BodyPart::UpperArmLeft => "upper_arm_left",
            BodyPart::UpperArmRight => "upper_arm_right",
            BodyPart::LowerArmLeft => "lower_arm_left",
            BodyPart::LowerArmRight => "lower_arm_right",
            BodyPart::UpperLegLeft => "upper_leg_left",
            BodyPart::UpperLegRight => "upper_leg_right",
            BodyPart::LowerLegLeft => "lower_leg_left",
            BodyPart::LowerLegRight => "lower_leg_right",
            BodyPart::HandLeft => "hand_left",
            BodyPart::HandRight => "hand_right",
            BodyPart::FootLeft => "foot_left",
            BodyPart::FootRight => "foot_right",
        }
    }

    fn is_left_leg(self) -> bool {
        matches!(self, BodyPart::UpperLegLeft | BodyPart::LowerLegLeft)
    }

    fn is_right_leg(self) -> bool {
        matches!(self, BodyPart::UpperLegRight | BodyPart::LowerLegRight)
    }
}

impl fmt::Display for BodyPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BodyPart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BodyPart::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidLabelMap(format!("unknown body part `{s}`")))
    }
}

/// Per-pixel body-part ids with their name table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: u32,
    height: u32,
    ids: Vec<u8>,
    table: BTreeMap<u8, BodyPart>,
}

impl LabelMap {
    pub fn new(
        width: u32,
        height: u32,
        ids: Vec<u8>,
        table: BTreeMap<u8, BodyPart>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidLabelMap("zero-sized label map".into()));
        }
        if ids.len() != width as usize * height as usize {
            return Err(Error::InvalidLabelMap(format!(
                "{} ids for a {width}x{height} map",
                ids.len()
            )));
        }
        let mut seen = [false; 256];
        for &id in &ids {
            seen[id as usize] = true;
        }
        if let Some(missing) = (0..=255u8).find(|&id| seen[id as usize] && !table.contains_key(&id))
        {
            return Err(Error::InvalidLabelMap(format!(
                "pixel id {missing} has no entry in the label table"
            )));
        }
        Ok(Self {
            width,
            height,
            ids,
            table,
        })
    }

    /// Builds a map using the canonical table where id = position in [`BodyPart::ALL`].
    pub fn from_parts(width: u32, height: u32, part: impl Fn(u32, u32) -> BodyPart) -> Self {
        let mut ids = Vec::with_capacity(width as usize * height as usize);
        for r in 0..height {
            for c in 0..width {
                ids.push(canonical_id(part(r, c)));
            }
        }
        Self::new(width, height, ids, canonical_table()).expect("canonical table covers all ids")
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

    pub fn ids(&self) -> &[u8] {
        &self.ids
    }

    pub fn table(&self) -> &BTreeMap<u8, BodyPart> {
        &self.table
    }

    pub fn part_at(&self, row: u32, col: u32) -> BodyPart {
        self.table[&self.ids[row as usize * self.width as usize + col as usize]]
    }

    /// Mask of pixels labelled with any of `parts`.
    pub fn mask_of(&self, parts: &[BodyPart]) -> BinaryMask {
        let mut lut = [false; 256];
        for (&id, part) in &self.table {
            lut[id as usize] = parts.contains(part);
        }
        let values: Vec<bool> = self.ids.iter().map(|&id| lut[id as usize]).collect();
        BinaryMask::from_bools(self.width, self.height, &values).expect("sizes agree")
    }

    /// Label table as `{"id": "name"}` JSON.
    pub fn table_json(&self) -> String {
        let m: BTreeMap<String, &str> = self
            .table
            .iter()
            .map(|(id, p)| (id.to_string(), p.as_str()))
            .collect();
        serde_json::to_string_pretty(&m).expect("string map serializes")
    }

    /// Encodes ids as an 8-bit palette PNG (index = id).
    pub fn ids_png(&self) -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Indexed);
            enc.set_depth(png::BitDepth::Eight);
            enc.set_palette(debug_palette());
            let mut w = enc.write_header().expect("in-memory png header");
            w.write_image_data(&self.ids).expect("in-memory png data");
        }
        out
    }

    /// Decodes an indexed (or 8-bit grayscale) PNG of ids plus its JSON table.
    pub fn from_png_and_table(png_bytes: &[u8], table_json: &str) -> Result<Self> {
        let table = parse_table(table_json)?;
        let mut dec = png::Decoder::new(Cursor::new(png_bytes));
        dec.set_transformations(png::Transformations::IDENTITY);
        let mut reader = dec
            .read_info()
            .map_err(|e| Error::InvalidLabelMap(format!("labels png: {e}")))?;
        let info = reader.info();
        let (width, height) = (info.width, info.height);
        match (info.color_type, info.bit_depth) {
            (png::ColorType::Indexed | png::ColorType::Grayscale, png::BitDepth::Eight) => {}
            (ct, bd) => {
                return Err(Error::InvalidLabelMap(format!(
                    "labels png must be 8-bit indexed or grayscale, got {ct:?}/{bd:?}"
                )))
            }
        }
        let size = reader
            .output_buffer_size()
            .ok_or_else(|| Error::InvalidLabelMap("labels png too large".into()))?;
        let mut buf = vec![0u8; size];
        let frame = reader
            .next_frame(&mut buf)
            .map_err(|e| Error::InvalidLabelMap(format!("labels png: {e}")))?;
        buf.truncate(frame.buffer_size());
        Self::new(width, height, buf, table)
    }

    /// Loads `labels.png` and its sidecar `labels.json` (same stem).
    pub fn load(png_path: impl AsRef<Path>) -> Result<Self> {
        let png_path = png_path.as_ref();
        let json_path = png_path.with_extension("json");
        let png = std::fs::read(png_path)?;
        let json = std::fs::read_to_string(&json_path)?;
        Self::from_png_and_table(&png, &json)
    }

    pub fn save(&self, png_path: impl AsRef<Path>) -> Result<()> {
        let png_path = png_path.as_ref();
        std::fs::write(png_path, self.ids_png())?;
        std::fs::write(png_path.with_extension("json"), self.table_json())?;
        Ok(())
    }
}

pub fn canonical_id(part: BodyPart) -> u8 {
    BodyPart::ALL.iter().position(|&p| p == part).unwrap() as u8
}

pub fn canonical_table() -> BTreeMap<u8, BodyPart> {
    BodyPart::ALL
        .into_iter()
        .enumerate()
        .map(|(i, p)| (i as u8, p))
        .collect()
}

pub fn parse_table(json: &str) -> Result<BTreeMap<u8, BodyPart>> {
    let raw: BTreeMap<String, String> = serde_json::from_str(json)
        .map_err(|e| Error::InvalidLabelMap(format!("label table json: {e}")))?;
    raw.into_iter()
        .map(|(k, v)| {
            let id = k
                .parse::<u8>()
                .map_err(|_| Error::InvalidLabelMap(format!("label id `{k}` is not 0-255")))?;
            Ok((id, v.parse()?))
        })
        .collect()
}

fn debug_palette() -> Vec<u8> {
    (0..256u32)
        .flat_map(|i| {
            if i == 0 {
                [0, 0, 0]
            } else {
                [
                    (i * 97 % 256) as u8,
                    (i * 53 % 256) as u8,
                    (i * 193 % 256) as u8,
                ]
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorsoHalf {
    UpperHalf,
    LowerHalf,
}

/// Which parts a garment covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentSelection {
    pub meta: GarmentMetadata,
    pub parts: BTreeSet<BodyPart>,
    pub torso: TorsoHalf,
    pub bridge_legs: bool,
}

pub fn parts_for(meta: GarmentMetadata) -> SegmentSelection {
    use BodyPart::*;
    let mut parts = BTreeSet::new();
    let long = meta.length == GarmentLength::Long;
    let torso = match meta.garment_type {
        GarmentType::Top => {
            parts.extend([UpperArmLeft, UpperArmRight]);
            if long {
                parts.extend([LowerArmLeft, LowerArmRight]);
            }
            TorsoHalf::UpperHalf
        }
        GarmentType::Pants | GarmentType::Skirt => {
            parts.extend([UpperLegLeft, UpperLegRight]);
            if long {
                parts.extend([LowerLegLeft, LowerLegRight]);
            }
            TorsoHalf::LowerHalf
        }
    };
    SegmentSelection {
        meta,
        parts,
        torso,
        bridge_legs: meta.garment_type == GarmentType::Skirt,
    }
}

/// Torso pixels on one side of the torso bounding-box midpoint row. The
/// midpoint row itself belongs to the upper half.
pub fn torso_half(labels: &LabelMap, half: TorsoHalf) -> Result<BinaryMask> {
    let mut torso = labels.mask_of(&[BodyPart::Torso]);
    let bbox = bounding_box(&torso).map_err(|_| Error::NoPersonDetected)?;
    let mid = (bbox.min_row + bbox.max_row) / 2;
    match half {
        TorsoHalf::UpperHalf => torso.retain(|r, _| r <= mid),
        TorsoHalf::LowerHalf => torso.retain(|r, _| r > mid),
    }
    Ok(torso)
}

fn mean_col(mask: &BinaryMask) -> Option<f64> {
    let (n, sum) = mask
        .iter_set()
        .fold((0u64, 0u64), |(n, s), p| (n + 1, s + p.col as u64));
    (n > 0).then(|| sum as f64 / n as f64)
}

/// Garment-relevant region: selected limb parts plus the matching torso half,
/// with the inter-leg gap filled for skirts.
pub fn select_segments(labels: &LabelMap, meta: GarmentMetadata) -> Result<BinaryMask> {
    let sel = parts_for(meta);
    let torso = torso_half(labels, sel.torso)?;
    let limbs = if sel.bridge_legs {
        let side = |pred: fn(BodyPart) -> bool| {
            let parts: Vec<BodyPart> = sel.parts.iter().copied().filter(|&p| pred(p)).collect();
            labels.mask_of(&parts)
        };
        let a = side(BodyPart::is_left_leg);
        let b = side(BodyPart::is_right_leg);
        // The subject's left leg usually sits on the image right; order by position.
        match (mean_col(&a), mean_col(&b)) {
            (Some(ca), Some(cb)) if cb < ca => bridge_horizontal(&b, &a)?,
            _ => bridge_horizontal(&a, &b)?,
        }
    } else {
        let parts: Vec<BodyPart> = sel.parts.iter().copied().collect();
        labels.mask_of(&parts)
    };
    limbs.union(&torso)
}

/// Every non-background person pixel.
pub fn body_mask(labels: &LabelMap) -> Result<BinaryMask> {
    let parts: Vec<BodyPart> = BodyPart::ALL
        .into_iter()
        .filter(|&p| p != BodyPart::Background)
        .collect();
    let m = labels.mask_of(&parts);
    if m.is_empty() {
        return Err(Error::NoPersonDetected);
    }
    Ok(m)
}

/// A person counts as present when the torso is visible.
pub fn person_present(labels: &LabelMap) -> bool {
    labels
        .table
        .iter()
        .any(|(&id, &p)| p == BodyPart::Torso && labels.ids.contains(&id))
}
