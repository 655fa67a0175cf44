#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use sico_core::synthetic::{self, Fixture};
use sico_core::{raster, Backends, FixtureRegistry};
use sico_service::{AppState, Catalog, JobRecord, JobStatus, Service, ServiceConfig};
use tempfile::TempDir;
use tokio::sync::oneshot;

pub fn repo_fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn catalog_path() -> PathBuf {
    repo_fixtures().join("catalog/catalog.json")
}

pub fn stick_figure_png() -> Vec<u8> {
    std::fs::read(repo_fixtures().join("subjects/stick_figure/image.png")).unwrap()
}

pub fn empty_scene_png() -> Vec<u8> {
    std::fs::read(repo_fixtures().join("subjects/empty_scene/image.png")).unwrap()
}

pub fn base_config(data_dir: &TempDir) -> ServiceConfig {
    let mut cfg = ServiceConfig::new(catalog_path(), data_dir.path());
    cfg.port = 0;
    cfg.fixture_dirs = vec![repo_fixtures().join("subjects")];
    cfg
}

/// An in-process server on an ephemeral port.
pub struct TestServer {
    pub base: String,
    pub state: Arc<AppState>,
    pub dir: TempDir,
    stop: Option<oneshot::Sender<()>>,
    handle: Option<tokio::task::JoinHandle<std::io::Result<()>>>,
}

impl TestServer {
    pub async fn start(edit: impl FnOnce(&mut ServiceConfig)) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(&dir);
        edit(&mut cfg);
        let service = tokio::task::spawn_blocking(move || Service::start(cfg))
            .await
            .unwrap()
            .expect("service starts");
        Self::serve(service, dir).await
    }

    pub async fn with_backends(edit: impl FnOnce(&mut ServiceConfig), backends: Backends) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(&dir);
        edit(&mut cfg);
        let catalog = Catalog::load(&cfg.catalog_path).unwrap();
        let service =
            tokio::task::spawn_blocking(move || Service::with_backends(cfg, catalog, backends))
                .await
                .unwrap()
                .expect("service starts");
        Self::serve(service, dir).await
    }

    async fn serve(service: Service, dir: TempDir) -> Self {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let state = service.state();
        let (stop, rx) = oneshot::channel();
        let handle = tokio::spawn(sico_service::serve(service, listener, async {
            let _ = rx.await;
        }));
        Self {
            base,
            state,
            dir,
            stop: Some(stop),
            handle: Some(handle),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    /// Stops the server and waits for the workers; keeps the data directory.
    pub async fn stop(mut self) -> TempDir {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
        if let Some(h) = self.handle.take() {
            h.await.unwrap().unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        std::mem::replace(&mut self.dir, dir)
    }
}

pub fn session_form(
    image: Vec<u8>,
    top: Option<&str>,
    bottom: Option<&str>,
) -> reqwest::multipart::Form {
    let mut form = reqwest::multipart::Form::new().part(
        "image",
        reqwest::multipart::Part::bytes(image)
            .file_name("me.png")
            .mime_str("image/png")
            .unwrap(),
    );
    if let Some(t) = top {
        form = form.text("true_top_size", t.to_string());
    }
    if let Some(b) = bottom {
        form = form.text("true_bottom_size", b.to_string());
    }
    form
}

/// Polls `GET /api/jobs/{id}` until terminal; asserts statuses never regress.
pub async fn wait_job(client: &reqwest::Client, server: &TestServer, job_id: &str) -> JobRecord {
    let deadline = Instant::now() + Duration::from_secs(30);
    let mut last = JobStatus::Queued;
    loop {
        let job: JobRecord = client
            .get(server.url(&format!("/api/jobs/{job_id}")))
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        assert!(
            job.status >= last,
            "job regressed from {last:?} to {:?}",
            job.status
        );
        last = job.status;
        if job.status.is_terminal() {
            return job;
        }
        assert!(Instant::now() < deadline, "job {job_id} did not finish");
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
}

/// Same as [`wait_job`] but straight against the state, for sync tests.
pub fn wait_job_sync(state: &AppState, job_id: &str) -> JobRecord {
    let deadline = Instant::now() + Duration::from_secs(30);
    let mut last = JobStatus::Queued;
    loop {
        let job = state.get_job(job_id).unwrap();
        assert!(job.status >= last);
        last = job.status;
        if job.status.is_terminal() {
            return job;
        }
        assert!(Instant::now() < deadline, "job {job_id} did not finish");
        std::thread::sleep(Duration::from_millis(2));
    }
}

/// Stick figure at a quarter of the resolution, registered with mocks.
pub fn small_fixture() -> Fixture {
    synthetic::stick_figure().downsample(4)
}

pub fn small_backends() -> (Backends, Fixture) {
    let f = small_fixture();
    let mut reg = FixtureRegistry::new();
    reg.register_fixture(f.clone()).unwrap();
    reg.register_fixture(synthetic::empty_scene().downsample(4))
        .unwrap();
    (Backends::mock(Arc::new(reg)), f)
}

pub fn png(img: &sico_core::RgbImage) -> Vec<u8> {
    raster::encode_png(img)
}
