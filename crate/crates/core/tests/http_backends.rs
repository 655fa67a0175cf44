//! Contract tests for the HTTP model adapters against an in-process stub server.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use image::Rgb;
use serde_json::{json, Value};

use sico_core::backends::{
    BodyParser, HttpBackends, HttpEndpoints, InpaintRequest, Inpainter, ObjectSegmenter,
};
use sico_core::{raster, synthetic, BinaryMask, Error, Point, Rect, RgbImage};

fn spawn(router: Router) -> SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, router).await.unwrap();
        });
    });
    rx.recv().unwrap()
}

fn decode_image_field(v: &Value, field: &str) -> RgbImage {
    raster::decode_image(&B64.decode(v[field].as_str().unwrap()).unwrap()).unwrap()
}

fn stub() -> SocketAddr {
    let fixture = Arc::new(synthetic::stick_figure());
    let f1 = fixture.clone();
    let router = Router::new()
        .route(
            "/good/parse",
            post(move |Json(_body): Json<Value>| {
                let f = f1.clone();
                async move {
                    let table: Value = serde_json::from_str(&f.labels.table_json()).unwrap();
                    Json(json!({ "labels": B64.encode(f.labels.ids_png()), "table": table }))
                }
            }),
        )
        .route(
            "/good/segment",
            post(|Json(body): Json<Value>| async move {
                let img = decode_image_field(&body, "image");
                assert_eq!(body["points"].as_array().unwrap().len(), 1);
                assert_eq!(body["box"], json!([1, 1, 4, 4]));
                // whole frame; the adapter must clip to the box
                Json(json!({ "mask": B64.encode(BinaryMask::full(img.width(), img.height()).to_png()) }))
            }),
        )
        .route(
            "/good/inpaint",
            post(|Json(body): Json<Value>| async move {
                let img = decode_image_field(&body, "image");
                assert!(body["reference"].is_null());
                assert_eq!(body["prompt"], "erase");
                let out = RgbImage::from_pixel(img.width(), img.height(), Rgb([1, 2, 3]));
                Json(json!({ "image": B64.encode(raster::encode_png(&out)) }))
            }),
        )
        .route(
            "/bad/parse",
            post(|_body: axum::body::Bytes| async move {
                let small = sico_core::LabelMap::from_parts(3, 3, |_, _| sico_core::BodyPart::Background);
                Json(json!({ "labels": B64.encode(small.ids_png()), "table": {"0": "background"} }))
            }),
        )
        .route(
            "/bad/segment",
            post(|_body: axum::body::Bytes| async move { Json(json!({ "mask": "%%%not-base64" })) }),
        )
        .route(
            "/bad/inpaint",
            post(|_body: axum::body::Bytes| async move { (StatusCode::SERVICE_UNAVAILABLE, "model overloaded") }),
        )
        .route(
            "/slow/parse",
            post(|_body: axum::body::Bytes| async move {
                tokio::time::sleep(Duration::from_secs(5)).await;
                Json(json!({}))
            }),
        );
    spawn(router)
}

fn backends(addr: SocketAddr, prefix: &str, timeout: Duration, retries: u32) -> HttpBackends {
    let base = format!("http://{addr}/{prefix}");
    HttpBackends::new(
        HttpEndpoints {
            seg_url: base.clone(),
            sam_url: base.clone(),
            inpaint_url: base,
        },
        timeout,
        retries,
    )
}

#[test]
fn parse_decodes_stub_labels() {
    let addr = stub();
    let f = synthetic::stick_figure();
    let b = backends(addr, "good", Duration::from_secs(10), 0);
    assert_eq!(b.parse(&f.image).unwrap(), f.labels);
}

#[test]
fn segment_is_clipped_to_box() {
    let addr = stub();
    let b = backends(addr, "good", Duration::from_secs(10), 0);
    let img = RgbImage::new(8, 8);
    let mask = b
        .segment(&img, &[Point { row: 2, col: 2 }], Rect::new(1, 1, 4, 4))
        .unwrap();
    assert_eq!(mask, Rect::new(1, 1, 4, 4).to_mask(8, 8));
}

#[test]
fn inpaint_result_is_recomposited_outside_mask() {
    let addr = stub();
    let b = backends(addr, "good", Duration::from_secs(10), 0);
    let base = RgbImage::from_fn(6, 4, |x, y| Rgb([x as u8 * 10, y as u8 * 10, 200]));
    let mask = BinaryMask::from_fn(6, 4, |r, c| r == 1 && c < 3);
    let edges = sico_core::maskops::contour_edges(&mask);
    let out = b
        .inpaint(&InpaintRequest {
            base: &base,
            mask: &mask,
            edge_guidance: &edges,
            reference: None,
            prompt: "erase",
        })
        .unwrap();
    for (x, y, p) in out.enumerate_pixels() {
        if mask.get(y, x) {
            assert_eq!(*p, Rgb([1, 2, 3]));
        } else {
            assert_eq!(p, base.get_pixel(x, y));
        }
    }
}

#[test]
fn mismatched_dimensions_are_protocol_errors() {
    let addr = stub();
    let b = backends(addr, "bad", Duration::from_secs(10), 0);
    let f = synthetic::stick_figure();
    let err = b.parse(&f.image).unwrap_err();
    assert!(matches!(err, Error::BackendProtocol(_)), "{err}");
    let err = b
        .segment(&f.image, &[Point { row: 1, col: 1 }], Rect::new(0, 0, 2, 2))
        .unwrap_err();
    assert!(matches!(err, Error::BackendProtocol(_)), "{err}");
}

#[test]
fn non_success_status_is_rejected() {
    let addr = stub();
    let b = backends(addr, "bad", Duration::from_secs(10), 3);
    let img = RgbImage::new(4, 4);
    let mask = BinaryMask::full(4, 4);
    let err = b
        .inpaint(&InpaintRequest {
            base: &img,
            mask: &mask,
            edge_guidance: &mask,
            reference: Some(&img),
            prompt: "",
        })
        .unwrap_err();
    match err {
        Error::BackendRejected(msg) => {
            assert!(msg.contains("503") && msg.contains("overloaded"), "{msg}")
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn unreachable_host_is_unavailable_after_retries() {
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let b = backends(
        SocketAddr::from(([127, 0, 0, 1], port)),
        "x",
        Duration::from_secs(1),
        2,
    );
    match b.parse(&RgbImage::new(2, 2)) {
        Err(Error::BackendUnavailable(msg)) => assert!(msg.contains("3 attempt"), "{msg}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn slow_backend_times_out_within_budget() {
    let addr = stub();
    let timeout = Duration::from_millis(300);
    let retries = 1;
    let b = backends(addr, "slow", timeout, retries);
    let start = Instant::now();
    let err = b.parse(&RgbImage::new(2, 2)).unwrap_err();
    let elapsed = start.elapsed();
    assert!(matches!(err, Error::BackendUnavailable(_)), "{err}");
    // bound: timeout × (retries + 1), plus scheduling slack
    assert!(
        elapsed < timeout * (retries + 1) + Duration::from_millis(400),
        "{elapsed:?}"
    );
}
