mod common;

use std::sync::Arc;

use common::*;
use reqwest::StatusCode;
use serde_json::Value;
use sico_core::backends::{HttpBackends, HttpEndpoints};
use sico_core::{raster, Backends, BinaryMask, MockBackends};
use sico_service::api::{CreatedSession, SubmittedJob};
use sico_service::{GarmentListing, JobStatus, SessionView};

async fn create(client: &reqwest::Client, s: &TestServer, top: &str, bottom: &str) -> String {
    let resp = client
        .post(s.url("/api/sessions"))
        .multipart(session_form(stick_figure_png(), Some(top), Some(bottom)))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::CREATED);
    resp.json::<CreatedSession>().await.unwrap().session_id
}

async fn submit(
    client: &reqwest::Client,
    s: &TestServer,
    session: &str,
    garment: &str,
    size: &str,
) -> reqwest::Response {
    client
        .post(s.url(&format!("/api/sessions/{session}/tryon")))
        .json(&serde_json::json!({ "garment_id": garment, "size": size }))
        .send()
        .await
        .unwrap()
}

async fn session(client: &reqwest::Client, s: &TestServer, id: &str) -> SessionView {
    client
        .get(s.url(&format!("/api/sessions/{id}")))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap()
}

async fn image(client: &reqwest::Client, s: &TestServer, id: &str) -> sico_core::RgbImage {
    let resp = client
        .get(s.url(&format!("/api/images/{id}")))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "image/png");
    raster::decode_image(&resp.bytes().await.unwrap()).unwrap()
}

async fn error_code(resp: reqwest::Response, status: StatusCode) -> String {
    assert_eq!(resp.status(), status);
    let v: Value = resp.json().await.unwrap();
    assert!(v["message"].is_string());
    v["error"].as_str().unwrap().to_string()
}

async fn run_tryon(
    client: &reqwest::Client,
    s: &TestServer,
    session: &str,
    garment: &str,
    size: &str,
) -> String {
    let resp = submit(client, s, session, garment, size).await;
    assert_eq!(resp.status(), StatusCode::ACCEPTED);
    let job = resp.json::<SubmittedJob>().await.unwrap().job_id;
    let done = wait_job(client, s, &job).await;
    assert_eq!(done.status, JobStatus::Done, "{:?}", done.error);
    assert!(done.error.is_none());
    done.result_id.unwrap()
}

#[tokio::test]
async fn full_shopper_flow() {
    let s = TestServer::start(|_| {}).await;
    let c = reqwest::Client::new();

    let sid = create(&c, &s, "S", "M").await;
    let view = session(&c, &s, &sid).await;
    assert_eq!(view.profile.true_top_size.as_str(), "S");
    assert_eq!(view.profile.true_bottom_size.as_str(), "M");
    assert_eq!(view.before_image_id, view.self_image_id);
    assert!(view.results.is_empty());
    let original = image(&c, &s, &view.self_image_id).await;
    assert_eq!(raster::encode_png(&original), stick_figure_png_normalised());

    let garments: Vec<GarmentListing> = c
        .get(s.url("/api/garments"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(garments.len(), 6);
    let jeans = garments.iter().find(|g| g.id == "jeans-indigo").unwrap();
    let raw: Value = c
        .get(s.url("/api/garments"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(raw[0]["type"], "top");
    assert!(raw[0]["length"].is_string());
    let thumb = c.get(s.url(&jeans.image_url)).send().await.unwrap();
    assert_eq!(thumb.status(), StatusCode::OK);

    // Immediately after submission the job is queued or running.
    let resp = submit(&c, &s, &sid, "jeans-indigo", "L").await;
    assert_eq!(resp.status(), StatusCode::ACCEPTED);
    let job_id = resp.json::<SubmittedJob>().await.unwrap().job_id;
    let early = s.state.get_job(&job_id).unwrap();
    assert!(early.status != JobStatus::Failed);
    let done = wait_job(&c, &s, &job_id).await;
    assert_eq!(done.status, JobStatus::Done);
    let r1 = done.result_id.unwrap();
    let r2 = run_tryon(&c, &s, &sid, "tee-red", "M").await;

    let view = session(&c, &s, &sid).await;
    assert_eq!(
        view.results
            .iter()
            .map(|r| r.result_id.clone())
            .collect::<Vec<_>>(),
        vec![r1.clone(), r2.clone()]
    );
    let res1 = &view.results[0];
    assert_eq!(res1.true_size.as_str(), "M");
    assert_eq!(res1.delta, 1);
    let img1 = image(&c, &s, &res1.image_id).await;
    assert_eq!(img1, s.state.replay(&r1).unwrap());
    assert_ne!(img1, original);

    // Continue from the first of two results.
    let resp = c
        .post(s.url(&format!("/api/sessions/{sid}/continue")))
        .json(&serde_json::json!({ "result_id": r1 }))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::NO_CONTENT);
    let view = session(&c, &s, &sid).await;
    assert_eq!(view.before_image_id, res1.image_id);
    assert_eq!(view.results.len(), 2);
    assert_eq!(image(&c, &s, &view.before_image_id).await, img1);

    // A top over the continued result keeps the new trousers.
    let r3 = run_tryon(&c, &s, &sid, "sweater-green", "L").await;
    let view = session(&c, &s, &sid).await;
    let res3 = view.results.iter().find(|r| r.result_id == r3).unwrap();
    assert_eq!(res3.base_image_id, res1.image_id);
    let img3 = image(&c, &s, &res3.image_id).await;
    let changed = |a: &sico_core::RgbImage, b: &sico_core::RgbImage, rows: std::ops::Range<u32>| {
        let d = raster::diff_mask(a, b).unwrap();
        rows.flat_map(|r| (0..d.width()).map(move |c| (r, c)))
            .filter(|&(r, c)| d.get(r, c))
            .count()
    };
    // legs keep the trousers from the first result; the upper torso changes
    assert_eq!(changed(&img1, &img3, 550..650), 0);
    assert!(changed(&original, &img3, 550..650) > 0);
    assert!(changed(&img1, &img3, 180..300) > 0);
}

/// The stored self-image is the decoded upload re-encoded by the service.
fn stick_figure_png_normalised() -> Vec<u8> {
    raster::encode_png(&raster::decode_image(&stick_figure_png()).unwrap())
}

#[tokio::test]
async fn upload_errors() {
    let s = TestServer::start(|_| {}).await;
    let c = reqwest::Client::new();
    let post = |form| c.post(s.url("/api/sessions")).multipart(form).send();

    let resp = post(session_form(stick_figure_png(), Some("S"), None))
        .await
        .unwrap();
    assert_eq!(
        error_code(resp, StatusCode::BAD_REQUEST).await,
        "MissingSize"
    );
    let resp = post(session_form(stick_figure_png(), None, Some("M")))
        .await
        .unwrap();
    assert_eq!(
        error_code(resp, StatusCode::BAD_REQUEST).await,
        "MissingSize"
    );
    let resp = post(session_form(stick_figure_png(), Some("S"), Some("XXXL")))
        .await
        .unwrap();
    assert_eq!(
        error_code(resp, StatusCode::BAD_REQUEST).await,
        "InvalidSize"
    );
    let resp = post(session_form(b"not an image".to_vec(), Some("S"), Some("M")))
        .await
        .unwrap();
    assert_eq!(
        error_code(resp, StatusCode::BAD_REQUEST).await,
        "InvalidImage"
    );

    let mut huge = Vec::new();
    image::GrayImage::new(8000, 8000)
        .write_to(
            &mut std::io::Cursor::new(&mut huge),
            image::ImageFormat::Png,
        )
        .unwrap();
    let resp = post(session_form(huge, Some("S"), Some("M")))
        .await
        .unwrap();
    assert_eq!(
        error_code(resp, StatusCode::BAD_REQUEST).await,
        "InvalidImage"
    );

    let resp = post(session_form(empty_scene_png(), Some("S"), Some("M")))
        .await
        .unwrap();
    assert_eq!(
        error_code(resp, StatusCode::UNPROCESSABLE_ENTITY).await,
        "NoPersonDetected"
    );
}

#[tokio::test]
async fn lookup_and_conflict_errors() {
    let s = TestServer::start(|_| {}).await;
    let c = reqwest::Client::new();
    let a = create(&c, &s, "M", "M").await;
    let b = create(&c, &s, "M", "M").await;

    let resp = submit(&c, &s, "nope", "tee-red", "M").await;
    assert_eq!(
        error_code(resp, StatusCode::NOT_FOUND).await,
        "UnknownSession"
    );
    let resp = submit(&c, &s, &a, "ghost", "M").await;
    assert_eq!(
        error_code(resp, StatusCode::NOT_FOUND).await,
        "UnknownGarment"
    );
    let resp = submit(&c, &s, &a, "tee-red", "XXS").await;
    assert_eq!(
        error_code(resp, StatusCode::BAD_REQUEST).await,
        "SizeNotOffered"
    );
    let resp = submit(&c, &s, &a, "tee-red", "huge").await;
    assert_eq!(
        error_code(resp, StatusCode::BAD_REQUEST).await,
        "InvalidSize"
    );
    let resp = c
        .post(s.url(&format!("/api/sessions/{a}/tryon")))
        .header("content-type", "application/json")
        .body("{\"garment\":1}")
        .send()
        .await
        .unwrap();
    assert_eq!(
        error_code(resp, StatusCode::BAD_REQUEST).await,
        "BadRequest"
    );

    let resp = c
        .get(s.url("/api/jobs/does-not-exist"))
        .send()
        .await
        .unwrap();
    assert_eq!(error_code(resp, StatusCode::NOT_FOUND).await, "UnknownJob");
    let resp = c
        .get(s.url("/api/sessions/does-not-exist"))
        .send()
        .await
        .unwrap();
    assert_eq!(
        error_code(resp, StatusCode::NOT_FOUND).await,
        "UnknownSession"
    );
    let resp = c
        .get(s.url(&format!("/api/images/{}", "ab".repeat(32))))
        .send()
        .await
        .unwrap();
    assert_eq!(
        error_code(resp, StatusCode::NOT_FOUND).await,
        "UnknownImage"
    );
    let resp = c
        .get(s.url("/api/images/..%2Fsico.redb"))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::NOT_FOUND);

    let cont = |sid: String, rid: String| {
        c.post(s.url(&format!("/api/sessions/{sid}/continue")))
            .json(&serde_json::json!({ "result_id": rid }))
            .send()
    };
    let resp = cont(a.clone(), "missing".into()).await.unwrap();
    assert_eq!(
        error_code(resp, StatusCode::NOT_FOUND).await,
        "UnknownResult"
    );
    let rb = run_tryon(&c, &s, &b, "shorts-khaki", "M").await;
    let resp = cont(a.clone(), rb.clone()).await.unwrap();
    assert_eq!(
        error_code(resp, StatusCode::CONFLICT).await,
        "ResultNotInSession"
    );
    let before = session(&c, &s, &a).await.before_image_id;
    assert_eq!(before, session(&c, &s, &a).await.self_image_id);
    assert_eq!(cont(b, rb).await.unwrap().status(), StatusCode::NO_CONTENT);
}

#[tokio::test]
async fn full_queue_returns_503() {
    let s = TestServer::start(|cfg| {
        cfg.workers = 1;
        cfg.queue_capacity = 1;
        cfg.backend.mock_delay_ms = 300;
    })
    .await;
    let c = reqwest::Client::new();
    let sid = create(&c, &s, "M", "M").await;
    let mut statuses = Vec::new();
    let mut codes = Vec::new();
    for _ in 0..4 {
        let resp = submit(&c, &s, &sid, "tee-red", "M").await;
        statuses.push(resp.status());
        if resp.status() == StatusCode::SERVICE_UNAVAILABLE {
            codes.push(error_code(resp, StatusCode::SERVICE_UNAVAILABLE).await);
        }
    }
    assert_eq!(statuses[0], StatusCode::ACCEPTED);
    assert!(!codes.is_empty(), "{statuses:?}");
    assert!(codes.iter().all(|c| c == "QueueFull"));
}

#[tokio::test]
async fn unreachable_http_backend_fails_the_job() {
    let closed = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let dead = format!("http://{}/inpaint", closed.local_addr().unwrap());
    drop(closed);

    let mut reg = sico_core::FixtureRegistry::new();
    sico_service::load_fixture_tree(&mut reg, &repo_fixtures().join("subjects")).unwrap();
    let mock = Arc::new(MockBackends::new(Arc::new(reg)));
    let http = Arc::new(HttpBackends::new(
        HttpEndpoints {
            seg_url: dead.clone(),
            sam_url: dead.clone(),
            inpaint_url: dead,
        },
        std::time::Duration::from_millis(500),
        1,
    ));
    let s = TestServer::with_backends(|_| {}, Backends::new(mock.clone(), mock, http)).await;
    let c = reqwest::Client::new();
    let sid = create(&c, &s, "M", "M").await;
    let resp = submit(&c, &s, &sid, "tee-red", "L").await;
    let job = resp.json::<SubmittedJob>().await.unwrap().job_id;
    let done = wait_job(&c, &s, &job).await;
    assert_eq!(done.status, JobStatus::Failed);
    assert!(done.result_id.is_none());
    assert_eq!(done.error_kind.as_deref(), Some("BackendUnavailable"));
    assert!(done.error.unwrap().contains("BackendUnavailable"));
    assert_eq!(done.stage.as_deref(), Some("remove"));
    assert!(session(&c, &s, &sid).await.results.is_empty());
}

#[tokio::test]
async fn intermediates_are_served_when_enabled() {
    let s = TestServer::start(|cfg| cfg.save_intermediates = true).await;
    let c = reqwest::Client::new();
    let sid = create(&c, &s, "M", "L").await;
    run_tryon(&c, &s, &sid, "maxi-plum", "S").await;
    let view = session(&c, &s, &sid).await;
    let inter = &view.results[0].intermediates;
    assert_eq!(inter.len(), 6);
    let adjusted = image(&c, &s, &inter["adjusted_mask"]).await;
    let mask = BinaryMask::from_fn(adjusted.width(), adjusted.height(), |r, col| {
        adjusted.get_pixel(col, r).0[0] > 0
    });
    assert!(!mask.is_empty());
}
