//! Sequential vs rayon-parallel raster kernels, plus a full mock try-on.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use image::Rgb;
use sico_core::maskops::{contour_edges_with, dilate_with, directional_dilate_with};
use sico_core::*;

fn fit_mask() -> BinaryMask {
    let f = synthetic::stick_figure();
    select_segments(
        &f.labels,
        GarmentMetadata::new(GarmentType::Pants, GarmentLength::Long),
    )
    .unwrap()
}

fn bench_dilate(c: &mut Criterion) {
    let mask = fit_mask();
    let mut group = c.benchmark_group("dilate_512x768");
    for iterations in [1u32, 10, 30] {
        for (name, exec) in [
            ("sequential", Exec::Sequential),
            ("parallel", Exec::Parallel),
        ] {
            group.bench_with_input(BenchmarkId::new(name, iterations), &iterations, |b, &it| {
                b.iter(|| dilate_with(&mask, it, exec))
            });
        }
    }
    group.finish();
}

fn bench_directional_and_contour(c: &mut Criterion) {
    let mask = fit_mask();
    let mut group = c.benchmark_group("kernels_512x768");
    for (name, exec) in [
        ("sequential", Exec::Sequential),
        ("parallel", Exec::Parallel),
    ] {
        group.bench_function(BenchmarkId::new("directional_dilate_x15", name), |b| {
            b.iter(|| directional_dilate_with(&mask, 15, exec))
        });
        group.bench_function(BenchmarkId::new("contour_edges", name), |b| {
            b.iter(|| contour_edges_with(&mask, exec))
        });
    }
    group.finish();
}

fn bench_try_on(c: &mut Criterion) {
    let f = synthetic::stick_figure();
    let mut reg = FixtureRegistry::new();
    reg.register_fixture(f.clone()).unwrap();
    let backends = Backends::mock(Arc::new(reg));
    let garment = synthetic::garment_image(Rgb([196, 40, 48]), 96, 128);
    let profile = UserProfile::new(SizeLabel::S, SizeLabel::M);
    let cfg = PipelineConfig::default();
    c.bench_function("mock_try_on_512x768", |b| {
        b.iter(|| {
            try_on(
                &f.image,
                &profile,
                GarmentInput {
                    id: "tee",
                    meta: GarmentMetadata::new(GarmentType::Top, GarmentLength::Short),
                    image: &garment,
                },
                SizeLabel::Xl,
                &backends,
                &cfg,
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_dilate,
    bench_directional_and_contour,
    bench_try_on
);
criterion_main!(benches);
