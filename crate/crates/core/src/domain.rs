//! Vocabulary shared by every stage: size labels, garment metadata and the
//! shopper profile.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One of the seven garment size labels, ordered `XXS` (index 1) to `XXL` (index 7).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SizeLabel {
    Xxs,
    Xs,
    S,
    M,
    L,
    Xl,
    Xxl,
}

impl SizeLabel {
    pub const ALL: [SizeLabel; 7] = [
        SizeLabel::Xxs,
        SizeLabel::Xs,
        SizeLabel::S,
        SizeLabel::M,
        SizeLabel::L,
        SizeLabel::Xl,
        SizeLabel::Xxl,
    ];

    /// Position in the size ordering, 1 through 7.
    pub fn index(self) -> i32 {
        match self {
            SizeLabel::Xxs => 1,
            SizeLabel::Xs => 2,
            SizeLabel::S => 3,
            SizeLabel::M => 4,
            SizeLabel::L => 5,
            SizeLabel::Xl => 6,
            SizeLabel::Xxl => 7,
        }
    }

    pub fn from_index(index: i32) -> Option<SizeLabel> {
        usize::try_from(index - 1)
            .ok()
            .and_then(|i| Self::ALL.get(i).copied())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SizeLabel::Xxs => "XXS",
            SizeLabel::Xs => "XS",
            SizeLabel::S => "S",
            SizeLabel::M => "M",
            SizeLabel::L => "L",
            SizeLabel::Xl => "XL",
            SizeLabel::Xxl => "XXL",
        }
    }
}

impl fmt::Display for SizeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SizeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        SizeLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == upper)
            .ok_or_else(|| Error::InvalidSize(s.to_string()))
    }
}

pub fn size_index(label: SizeLabel) -> i32 {
    label.index()
}

/// Signed step count from the shopper's true size to the selected garment size.
/// Positive means a looser (larger) garment.
pub fn size_delta(user: SizeLabel, garment: SizeLabel) -> i32 {
    garment.index() - user.index()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GarmentType {
    Top,
    Pants,
    Skirt,
}

impl GarmentType {
    pub const ALL: [GarmentType; 3] = [GarmentType::Top, GarmentType::Pants, GarmentType::Skirt];

    pub fn body_region(self) -> BodyRegion {
        match self {
            GarmentType::Top => BodyRegion::Upper,
            GarmentType::Pants | GarmentType::Skirt => BodyRegion::Lower,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GarmentType::Top => "top",
            GarmentType::Pants => "pants",
            GarmentType::Skirt => "skirt",
        }
    }
}

impl fmt::Display for GarmentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GarmentType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "top" => Ok(GarmentType::Top),
            "pants" => Ok(GarmentType::Pants),
            "skirt" => Ok(GarmentType::Skirt),
            _ => Err(Error::InvalidMetadata(format!(
                "unknown garment type `{s}`"
            ))),
        }
    }
}

/// Sleeve length for tops, leg length for bottoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GarmentLength {
    Short,
    Long,
}

impl GarmentLength {
    pub const ALL: [GarmentLength; 2] = [GarmentLength::Short, GarmentLength::Long];

    pub fn as_str(self) -> &'static str {
        match self {
            GarmentLength::Short => "short",
            GarmentLength::Long => "long",
        }
    }
}

impl fmt::Display for GarmentLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GarmentLength {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "short" | "s" => Ok(GarmentLength::Short),
            "long" | "l" => Ok(GarmentLength::Long),
            _ => Err(Error::InvalidMetadata(format!(
                "unknown garment length `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyRegion {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GarmentMetadata {
    #[serde(rename = "type")]
    pub garment_type: GarmentType,
    pub length: GarmentLength,
}

impl GarmentMetadata {
    pub fn new(garment_type: GarmentType, length: GarmentLength) -> Self {
        Self {
            garment_type,
            length,
        }
    }

    pub fn body_region(&self) -> BodyRegion {
        self.garment_type.body_region()
    }

    /// All six type/length combinations.
    pub fn all() -> impl Iterator<Item = GarmentMetadata> {
        GarmentType::ALL.into_iter().flat_map(|t| {
            GarmentLength::ALL
                .into_iter()
                .map(move |l| GarmentMetadata::new(t, l))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub true_top_size: SizeLabel,
    pub true_bottom_size: SizeLabel,
}

impl UserProfile {
    pub fn new(true_top_size: SizeLabel, true_bottom_size: SizeLabel) -> Self {
        Self {
            true_top_size,
            true_bottom_size,
        }
    }

    /// The true size that applies to garments worn on `region`.
    pub fn true_size_for(&self, region: BodyRegion) -> SizeLabel {
        match region {
            BodyRegion::Upper => self.true_top_size,
            BodyRegion::Lower => self.true_bottom_size,
        }
    }
}
