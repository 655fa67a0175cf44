//! Writes the synthetic subjects and sample catalog under the given directory
//! (default `fixtures/`).
//!
//!     cargo run -p sico-core --example gen_fixtures -- fixtures

use std::fs;
use std::path::Path;

use image::Rgb;
use sico_core::raster;
use sico_core::synthetic::{self, Fixture};

fn write_subject(dir: &Path, f: &Fixture) -> sico_core::Result<()> {
    fs::create_dir_all(dir)?;
    raster::save_png(&f.image, dir.join("image.png"))?;
    f.labels.save(dir.join("labels.png"))?;
    if let Some(t) = &f.truth_garment_mask {
        t.save(dir.join("truth_garment_mask.png"))?;
    }
    Ok(())
}

fn main() -> sico_core::Result<()> {
    let root = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    let root = Path::new(&root);
    write_subject(
        &root.join("subjects/stick_figure"),
        &synthetic::stick_figure(),
    )?;
    write_subject(
        &root.join("subjects/empty_scene"),
        &synthetic::empty_scene(),
    )?;

    let garments = [
        (
            "tee-red",
            "Red Tee",
            "top",
            "short",
            Rgb([196, 40, 48]),
            &["XS", "S", "M", "L", "XL"][..],
        ),
        (
            "sweater-green",
            "Green Sweater",
            "top",
            "long",
            Rgb([40, 130, 70]),
            &["S", "M", "L", "XL", "XXL"][..],
        ),
        (
            "shorts-khaki",
            "Khaki Shorts",
            "pants",
            "short",
            Rgb([190, 170, 120]),
            &["S", "M", "L"][..],
        ),
        (
            "jeans-indigo",
            "Indigo Jeans",
            "pants",
            "long",
            Rgb([40, 50, 110]),
            &["XXS", "XS", "S", "M", "L", "XL", "XXL"][..],
        ),
        (
            "mini-yellow",
            "Yellow Mini Skirt",
            "skirt",
            "short",
            Rgb([230, 200, 30]),
            &["XS", "S", "M"][..],
        ),
        (
            "maxi-plum",
            "Plum Maxi Skirt",
            "skirt",
            "long",
            Rgb([110, 40, 100]),
            &["S", "M", "L", "XL"][..],
        ),
    ];
    let cat = root.join("catalog");
    fs::create_dir_all(cat.join("images"))?;
    let mut entries = Vec::new();
    for (id, name, ty, len, color, sizes) in garments {
        let file = format!("images/{id}.png");
        raster::save_png(&synthetic::garment_image(color, 96, 128), cat.join(&file))?;
        entries.push(serde_json::json!({
            "id": id, "name": name, "image": file, "type": ty, "length": len, "sizes": sizes,
        }));
    }
    fs::write(
        cat.join("catalog.json"),
        serde_json::to_string_pretty(&entries)?,
    )?;
    println!("fixtures written to {}", root.display());
    Ok(())
}
