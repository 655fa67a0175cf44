//! Deterministic synthetic subjects and garments used by tests, benches and
//! the checked-in fixture set.

use image::Rgb;

use crate::maskops::{BinaryMask, Rect};
use crate::raster::RgbImage;
use crate::segmentation::{BodyPart, LabelMap};

pub const CANVAS_WIDTH: u32 = 512;
pub const CANVAS_HEIGHT: u32 = 768;

/// Rectangles of the stick figure, named by where they appear in the image.
/// The subject faces the camera, so their right side is on the image left.
pub struct Geometry {
    pub head: Rect,
    pub torso: Rect,
    pub upper_arm_img_left: Rect,
    pub upper_arm_img_right: Rect,
    pub lower_arm_img_left: Rect,
    pub lower_arm_img_right: Rect,
    pub hand_img_left: Rect,
    pub hand_img_right: Rect,
    pub upper_leg_img_left: Rect,
    pub upper_leg_img_right: Rect,
    pub lower_leg_img_left: Rect,
    pub lower_leg_img_right: Rect,
    pub foot_img_left: Rect,
    pub foot_img_right: Rect,
    /// Last torso row covered by the shirt; the trousers start below it.
    pub shirt_bottom_row: u32,
}

pub const GEOMETRY: Geometry = Geometry {
    head: Rect {
        min_row: 75,
        min_col: 211,
        max_row: 165,
        max_col: 301,
    },
    torso: Rect {
        min_row: 170,
        min_col: 196,
        max_row: 420,
        max_col: 316,
    },
    upper_arm_img_left: Rect {
        min_row: 175,
        min_col: 150,
        max_row: 300,
        max_col: 190,
    },
    upper_arm_img_right: Rect {
        min_row: 175,
        min_col: 322,
        max_row: 300,
        max_col: 362,
    },
    lower_arm_img_left: Rect {
        min_row: 301,
        min_col: 150,
        max_row: 420,
        max_col: 190,
    },
    lower_arm_img_right: Rect {
        min_row: 301,
        min_col: 322,
        max_row: 420,
        max_col: 362,
    },
    hand_img_left: Rect {
        min_row: 421,
        min_col: 150,
        max_row: 450,
        max_col: 190,
    },
    hand_img_right: Rect {
        min_row: 421,
        min_col: 322,
        max_row: 450,
        max_col: 362,
    },
    upper_leg_img_left: Rect {
        min_row: 421,
        min_col: 200,
        max_row: 580,
        max_col: 250,
    },
    upper_leg_img_right: Rect {
        min_row: 421,
        min_col: 262,
        max_row: 580,
        max_col: 312,
    },
    lower_leg_img_left: Rect {
        min_row: 581,
        min_col: 200,
        max_row: 720,
        max_col: 250,
    },
    lower_leg_img_right: Rect {
        min_row: 581,
        min_col: 262,
        max_row: 720,
        max_col: 312,
    },
    foot_img_left: Rect {
        min_row: 721,
        min_col: 195,
        max_row: 745,
        max_col: 250,
    },
    foot_img_right: Rect {
        min_row: 721,
        min_col: 262,
        max_row: 745,
        max_col: 317,
    },
    shirt_bottom_row: 330,
};

impl Geometry {
    pub fn part_at(&self, row: u32, col: u32) -> BodyPart {
        use BodyPart::*;
        let table = [
            (self.head, Head),
            (self.torso, Torso),
            (self.upper_arm_img_left, UpperArmRight),
            (self.upper_arm_img_right, UpperArmLeft),
            (self.lower_arm_img_left, LowerArmRight),
            (self.lower_arm_img_right, LowerArmLeft),
            (self.hand_img_left, HandRight),
            (self.hand_img_right, HandLeft),
            (self.upper_leg_img_left, UpperLegRight),
            (self.upper_leg_img_right, UpperLegLeft),
            (self.lower_leg_img_left, LowerLegRight),
            (self.lower_leg_img_right, LowerLegLeft),
            (self.foot_img_left, FootRight),
            (self.foot_img_right, FootLeft),
        ];
        table
            .iter()
            .find(|(rect, _)| rect.contains(row, col))
            .map(|&(_, p)| p)
            .unwrap_or(Background)
    }
}

/// A subject image with its label map and the true extent of their clothing.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub image: RgbImage,
    pub labels: LabelMap,
    pub truth_garment_mask: Option<BinaryMask>,
}

impl Fixture {
    /// Nearest-neighbour reduction by an integer factor, for fast tests.
    pub fn downsample(&self, factor: u32) -> Fixture {
        let k = factor.max(1);
        let (w, h) = (self.image.width() / k, self.image.height() / k);
        Fixture {
            image: RgbImage::from_fn(w, h, |x, y| *self.image.get_pixel(x * k, y * k)),
            labels: LabelMap::from_parts(w, h, |r, c| self.labels.part_at(r * k, c * k)),
            truth_garment_mask: self
                .truth_garment_mask
                .as_ref()
                .map(|m| BinaryMask::from_fn(w, h, |r, c| m.get(r * k, c * k))),
        }
    }
}

const SKIN: Rgb<u8> = Rgb([224, 172, 140]);
const HAIR: Rgb<u8> = Rgb([60, 40, 30]);
const SHIRT: Rgb<u8> = Rgb([52, 94, 168]);
const TROUSERS: Rgb<u8> = Rgb([70, 70, 76]);
const SHOES: Rgb<u8> = Rgb([30, 24, 20]);

fn background(x: u32, y: u32) -> Rgb<u8> {
    let t = ((x * 31 + y * 17) % 7) as u8;
    Rgb([214 + t, 218 + t, 222 - t])
}

fn clothing(part: BodyPart, row: u32) -> Option<Rgb<u8>> {
    use BodyPart::*;
    match part {
        Torso if row <= GEOMETRY.shirt_bottom_row => Some(SHIRT),
        UpperArmLeft | UpperArmRight => Some(SHIRT),
        Torso | UpperLegLeft | UpperLegRight | LowerLegLeft | LowerLegRight => Some(TROUSERS),
        _ => None,
    }
}

/// Standing figure in a short-sleeved shirt and long trousers on a 512×768 canvas.
pub fn stick_figure() -> Fixture {
    let g = &GEOMETRY;
    let labels = LabelMap::from_parts(CANVAS_WIDTH, CANVAS_HEIGHT, |r, c| g.part_at(r, c));
    let image = RgbImage::from_fn(CANVAS_WIDTH, CANVAS_HEIGHT, |x, y| {
        let part = g.part_at(y, x);
        if let Some(c) = clothing(part, y) {
            // faint weave so garments are not perfectly flat
            let t = ((x + 2 * y) % 5) as u8;
            return Rgb([c[0] + t, c[1] + t, c[2] + t]);
        }
        match part {
            BodyPart::Background => background(x, y),
            BodyPart::Head if y < g.head.min_row + 20 => HAIR,
            BodyPart::FootLeft | BodyPart::FootRight => SHOES,
            _ => SKIN,
        }
    });
    let truth = BinaryMask::from_fn(CANVAS_WIDTH, CANVAS_HEIGHT, |r, c| {
        clothing(g.part_at(r, c), r).is_some()
    });
    Fixture {
        image,
        labels,
        truth_garment_mask: Some(truth),
    }
}

/// Empty scene: background only, no person.
pub fn empty_scene() -> Fixture {
    Fixture {
        image: RgbImage::from_fn(CANVAS_WIDTH, CANVAS_HEIGHT, |x, y| {
            let Rgb([r, g, b]) = background(x, y);
            Rgb([r.saturating_sub(40), g, b.saturating_sub(60)])
        }),
        labels: LabelMap::from_parts(CANVAS_WIDTH, CANVAS_HEIGHT, |_, _| BodyPart::Background),
        truth_garment_mask: None,
    }
}

/// Flat-lay garment product shot: `color` shape on white.
pub fn garment_image(color: Rgb<u8>, width: u32, height: u32) -> RgbImage {
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    RgbImage::from_fn(width, height, |x, y| {
        let dx = (x as f64 - cx).abs() / cx;
        let dy = (y as f64 - cy).abs() / cy;
        if dx < 0.8 && dy < 0.85 {
            color
        } else {
            Rgb([255, 255, 255])
        }
    })
}
