use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use crossbeam_channel::{Sender, TrySendError};
use dashmap::DashMap;
use sico_core::segmentation::person_present;
use sico_core::{
    raster, try_on_cancellable, Backends, CancelToken, GarmentInput, PipelineConfig, RgbImage,
    SizeLabel, TryOnResult, UserProfile,
};

use crate::catalog::{Catalog, GarmentListing};
use crate::config::ServiceConfig;
use crate::error::ApiError;
use crate::model::*;
use crate::store::{Store, StoreError, Table};

/// Shared service state. Each session sits behind its own mutex, so work on
/// different sessions never contends; job records are read as snapshots.
pub struct AppState {
    pub config: ServiceConfig,
    pub catalog: Catalog,
    pub backends: Backends,
    pub store: Store,
    sessions: DashMap<String, Arc<Mutex<SessionRecord>>>,
    jobs: DashMap<String, JobRecord>,
    results: DashMap<String, ResultRecord>,
    garment_images: BTreeMap<String, String>,
    queue: Mutex<Option<Sender<String>>>,
    shutting_down: AtomicBool,
    cancel: CancelToken,
}

impl AppState {
    /// Opens the store, restores persisted records and interns catalog
    /// images. Jobs left queued or running by a previous process are marked
    /// failed.
    pub(crate) fn open(
        config: ServiceConfig,
        catalog: Catalog,
        backends: Backends,
    ) -> Result<Self, StoreError> {
        let store = Store::open(&config.data_dir)?;
        let mut garment_images = BTreeMap::new();
        for g in catalog.iter() {
            let id = store.put_image(&g.image)?;
            store.put(Table::Catalog, &g.id, &listing(g, &id))?;
            garment_images.insert(g.id.clone(), id);
        }
        let state = Self {
            config,
            catalog,
            backends,
            store,
            sessions: DashMap::new(),
            jobs: DashMap::new(),
            results: DashMap::new(),
            garment_images,
            queue: Mutex::new(None),
            shutting_down: AtomicBool::new(false),
            cancel: CancelToken::new(),
        };
        for (id, s) in state.store.all::<SessionRecord>(Table::Sessions)? {
            state.sessions.insert(id, Arc::new(Mutex::new(s)));
        }
        for (id, r) in state.store.all::<ResultRecord>(Table::Results)? {
            state.results.insert(id, r);
        }
        for (id, mut j) in state.store.all::<JobRecord>(Table::Jobs)? {
            if !j.status.is_terminal() {
                j.status = JobStatus::Failed;
                j.error = Some("interrupted by service restart".into());
                j.error_kind = Some("Interrupted".into());
                j.finished_at = Some(now_ms());
                state.store.put(Table::Jobs, &id, &j)?;
            }
            state.jobs.insert(id, j);
        }
        Ok(state)
    }

    pub(crate) fn attach_queue(&self, tx: Sender<String>) {
        *self.queue.lock().unwrap() = Some(tx);
    }

    /// Stops accepting try-ons and closes the queue. Jobs still queued are
    /// failed by the workers; the running ones complete.
    pub fn begin_shutdown(&self) {
        self.shutting_down.store(true, Ordering::SeqCst);
        self.queue.lock().unwrap().take();
    }

    /// Additionally interrupts running pipelines at their next stage boundary.
    pub fn abort_running(&self) {
        self.begin_shutdown();
        self.cancel.cancel();
    }

    pub fn is_shutting_down(&self) -> bool {
        self.shutting_down.load(Ordering::SeqCst)
    }

    pub fn pipeline_config(&self, seed: u64) -> PipelineConfig {
        PipelineConfig::with_seed(seed)
    }

    // ---- sessions -------------------------------------------------------

    /// Validates and stores an upload. Blocking: runs the body parser.
    pub fn create_session(
        &self,
        image: Option<&[u8]>,
        true_top: Option<&str>,
        true_bottom: Option<&str>,
    ) -> Result<String, ApiError> {
        let top = parse_size(true_top, "true_top_size")?;
        let bottom = parse_size(true_bottom, "true_bottom_size")?;
        let bytes = image.ok_or_else(|| ApiError::InvalidImage("missing `image` field".into()))?;
        let (w, h) =
            raster::peek_dimensions(bytes).map_err(|e| ApiError::InvalidImage(e.to_string()))?;
        let max = self.config.max_image_dim;
        if w == 0 || h == 0 || w > max || h > max {
            return Err(ApiError::InvalidImage(format!(
                "{w}x{h} exceeds the {max}x{max} limit"
            )));
        }
        let decoded =
            raster::decode_image(bytes).map_err(|e| ApiError::InvalidImage(e.to_string()))?;
        let canvas = raster::letterbox(
            &decoded,
            self.config.canvas_width,
            self.config.canvas_height,
        );

        let labels = self.backends.parser.parse(&canvas).map_err(backend_error)?;
        if labels.dims() != canvas.dimensions() || !person_present(&labels) {
            return Err(ApiError::NoPersonDetected);
        }

        let image_id = self.store.put_image(&canvas)?;
        let now = now_ms();
        let session = SessionRecord {
            id: new_id(),
            profile: UserProfile::new(top, bottom),
            self_image_id: image_id.clone(),
            before_image_id: image_id,
            results: Vec::new(),
            created_at: now,
            last_access: now,
        };
        self.store.put(Table::Sessions, &session.id, &session)?;
        let id = session.id.clone();
        self.sessions
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        tracing::info!(session = %id, "session created");
        Ok(id)
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionRecord>>, ApiError> {
        self.sessions
            .get(id)
            .map(|s| s.clone())
            .ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }

    pub fn get_session(&self, id: &str) -> Result<SessionView, ApiError> {
        let handle = self.session(id)?;
        let mut s = handle.lock().unwrap();
        s.last_access = now_ms();
        let results = s
            .results
            .iter()
            .filter_map(|r| self.results.get(r).map(|r| ResultView::of(&r)))
            .collect();
        Ok(SessionView {
            session_id: s.id.clone(),
            profile: s.profile,
            self_image_id: s.self_image_id.clone(),
            before_image_id: s.before_image_id.clone(),
            before_image_url: image_url(&s.before_image_id),
            results,
        })
    }

    /// Points the session's before-image at one of its own results.
    pub fn continue_from(&self, session_id: &str, result_id: &str) -> Result<(), ApiError> {
        let handle = self.session(session_id)?;
        let result = self
            .results
            .get(result_id)
            .map(|r| r.clone())
            .ok_or_else(|| ApiError::UnknownResult(result_id.to_string()))?;
        let mut s = handle.lock().unwrap();
        if result.session_id != s.id || !s.results.contains(&result.id) {
            return Err(ApiError::ResultNotInSession(result_id.to_string()));
        }
        s.before_image_id = result.image_id.clone();
        s.last_access = now_ms();
        self.store.put(Table::Sessions, &s.id, &*s)?;
        Ok(())
    }

    /// Drops sessions idle for longer than the configured TTL, with their
    /// results and finished jobs. Returns the number removed.
    pub fn sweep_expired(&self, now: u64) -> usize {
        let ttl = self.config.session_ttl.as_millis() as u64;
        let expired: Vec<String> = self
            .sessions
            .iter()
            .filter(|e| e.value().lock().unwrap().last_access.saturating_add(ttl) < now)
            .map(|e| e.key().clone())
            .collect();
        for id in &expired {
            if let Some((_, handle)) = self.sessions.remove(id) {
                for r in &handle.lock().unwrap().results {
                    self.results.remove(r);
                    let _ = self.store.remove(Table::Results, r);
                }
            }
            let _ = self.store.remove(Table::Sessions, id);
            let done: Vec<String> = self
                .jobs
                .iter()
                .filter(|j| &j.session_id == id && j.status.is_terminal())
                .map(|j| j.job_id.clone())
                .collect();
            for j in done {
                self.jobs.remove(&j);
                let _ = self.store.remove(Table::Jobs, &j);
            }
            tracing::info!(session = %id, "session expired");
        }
        expired.len()
    }

    // ---- catalog and images --------------------------------------------

    pub fn list_garments(&self) -> Vec<GarmentListing> {
        self.catalog
            .iter()
            .map(|g| listing(g, &self.garment_images[&g.id]))
            .collect()
    }

    pub fn image_png(&self, id: &str) -> Result<Vec<u8>, ApiError> {
        self.store
            .image_bytes(id)?
            .ok_or_else(|| ApiError::UnknownImage(id.to_string()))
    }

    pub fn result(&self, id: &str) -> Option<ResultRecord> {
        self.results.get(id).map(|r| r.clone())
    }

    // ---- jobs -----------------------------------------------------------

    pub fn submit_tryon(
        &self,
        session_id: &str,
        garment_id: &str,
        size: &str,
    ) -> Result<String, ApiError> {
        let handle = self.session(session_id)?;
        let garment = self
            .catalog
            .get(garment_id)
            .ok_or_else(|| ApiError::UnknownGarment(garment_id.to_string()))?;
        let size: SizeLabel = size
            .parse()
            .map_err(|_| ApiError::InvalidSize(size.to_string()))?;
        if !garment.offers(size) {
            return Err(ApiError::SizeNotOffered {
                garment: garment.id.clone(),
                size: size.to_string(),
            });
        }
        if self.is_shutting_down() {
            return Err(ApiError::ShuttingDown);
        }
        let base_image_id = {
            let mut s = handle.lock().unwrap();
            s.last_access = now_ms();
            s.before_image_id.clone()
        };
        let job = JobRecord {
            job_id: new_id(),
            session_id: session_id.to_string(),
            garment_id: garment.id.clone(),
            size,
            seed: self.config.seed,
            base_image_id,
            status: JobStatus::Queued,
            result_id: None,
            error: None,
            error_kind: None,
            stage: None,
            created_at: now_ms(),
            started_at: None,
            finished_at: None,
        };
        let id = job.job_id.clone();
        self.jobs.insert(id.clone(), job.clone());

        let sent = match &*self.queue.lock().unwrap() {
            Some(tx) => tx.try_send(id.clone()),
            None => Err(TrySendError::Disconnected(id.clone())),
        };
        match sent {
            Ok(()) => {
                self.store.put(Table::Jobs, &id, &job)?;
                tracing::info!(job = %id, session = %session_id, garment = %garment_id, %size, "job queued");
                Ok(id)
            }
            Err(e) => {
                self.jobs.remove(&id);
                Err(match e {
                    TrySendError::Full(_) => ApiError::QueueFull,
                    TrySendError::Disconnected(_) => ApiError::ShuttingDown,
                })
            }
        }
    }

    pub fn get_job(&self, id: &str) -> Result<JobRecord, ApiError> {
        self.jobs
            .get(id)
            .map(|j| j.clone())
            .ok_or_else(|| ApiError::UnknownJob(id.to_string()))
    }

    /// Applies a status change, refusing moves that would regress.
    fn transition(
        &self,
        id: &str,
        next: JobStatus,
        f: impl FnOnce(&mut JobRecord),
    ) -> Option<JobRecord> {
        let snapshot = {
            let mut j = self.jobs.get_mut(id)?;
            if !j.status.can_become(next) {
                tracing::error!(job = %id, from = ?j.status, to = ?next, "illegal job transition");
                return None;
            }
            j.status = next;
            f(&mut j);
            j.clone()
        };
        if let Err(e) = self.store.put(Table::Jobs, id, &snapshot) {
            tracing::warn!(job = %id, error = %e, "job not persisted");
        }
        Some(snapshot)
    }

    fn fail_job(&self, id: &str, kind: &str, stage: Option<&str>, message: String) {
        tracing::warn!(job = %id, %kind, %message, "job failed");
        self.transition(id, JobStatus::Failed, |j| {
            j.error = Some(message);
            j.error_kind = Some(kind.to_string());
            j.stage = stage.map(str::to_string);
            j.finished_at = Some(now_ms());
        });
    }

    /// Worker entry point for one dequeued job.
    pub(crate) fn run_job(&self, id: &str) {
        if self.is_shutting_down() {
            self.fail_job(
                id,
                "ShuttingDown",
                None,
                "service shut down before the job started".into(),
            );
            return;
        }
        let Some(job) = self.transition(id, JobStatus::Running, |j| j.started_at = Some(now_ms()))
        else {
            return;
        };
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| self.execute(&job)));
        match outcome {
            Ok(Ok(result_id)) => {
                self.transition(id, JobStatus::Done, |j| {
                    j.result_id = Some(result_id);
                    j.finished_at = Some(now_ms());
                });
                tracing::info!(job = %id, "job done");
            }
            Ok(Err(f)) => self.fail_job(id, &f.kind, f.stage.as_deref(), f.message),
            Err(_) => self.fail_job(id, "Internal", None, "pipeline panicked".into()),
        }
    }

    fn execute(&self, job: &JobRecord) -> Result<String, JobFailure> {
        let handle = self
            .session(&job.session_id)
            .map_err(|e| JobFailure::new("UnknownSession", e.to_string()))?;
        let profile = handle.lock().unwrap().profile;
        let garment = self
            .catalog
            .get(&job.garment_id)
            .ok_or_else(|| JobFailure::new("UnknownGarment", job.garment_id.clone()))?;
        let base = self
            .store
            .load_image(&job.base_image_id)
            .map_err(|e| JobFailure::new("Internal", e.to_string()))?
            .ok_or_else(|| {
                JobFailure::new(
                    "Internal",
                    format!("base image {} missing", job.base_image_id),
                )
            })?;

        let result = try_on_cancellable(
            &base,
            &profile,
            GarmentInput {
                id: &garment.id,
                meta: garment.metadata,
                image: &garment.image,
            },
            job.size,
            &self.backends,
            &self.pipeline_config(job.seed),
            &self.cancel,
        )
        .map_err(|e| JobFailure {
            kind: e.source.kind().to_string(),
            stage: Some(e.stage.as_str().to_string()),
            message: format!("{}: {e}", e.source.kind()),
        })?;

        let internal = |e: StoreError| JobFailure::new("Internal", e.to_string());
        let image_id = self.store.put_image(&result.image).map_err(internal)?;
        let intermediates = if self.config.save_intermediates {
            self.save_intermediates(&result).map_err(internal)?
        } else {
            BTreeMap::new()
        };
        let record = ResultRecord {
            id: new_id(),
            session_id: job.session_id.clone(),
            job_id: job.job_id.clone(),
            garment_id: garment.id.clone(),
            size: job.size,
            seed: job.seed,
            base_image_id: job.base_image_id.clone(),
            image_id,
            provenance: result.provenance,
            intermediates,
            created_at: now_ms(),
        };
        self.store
            .put(Table::Results, &record.id, &record)
            .map_err(internal)?;
        let result_id = record.id.clone();
        self.results.insert(result_id.clone(), record);

        let mut s = handle.lock().unwrap();
        s.results.push(result_id.clone());
        self.store
            .put(Table::Sessions, &s.id, &*s)
            .map_err(internal)?;
        Ok(result_id)
    }

    fn save_intermediates(&self, r: &TryOnResult) -> Result<BTreeMap<String, String>, StoreError> {
        let mut out = BTreeMap::new();
        out.insert("removed".into(), self.store.put_image(&r.removed_image)?);
        for (name, mask) in [
            ("rough_mask", &r.rough_mask),
            ("refined_mask", &r.refined_mask),
            ("regular_fit_mask", &r.regular_mask),
            ("adjusted_mask", &r.adjusted_mask),
            ("removal_edges", &r.removal_edges),
        ] {
            out.insert(name.into(), self.store.put_image(&mask.to_rgb())?);
        }
        Ok(out)
    }

    /// Recomputes a stored result from its recorded inputs.
    pub fn replay(&self, result_id: &str) -> Result<RgbImage, ApiError> {
        let r = self
            .result(result_id)
            .ok_or_else(|| ApiError::UnknownResult(result_id.to_string()))?;
        let profile = self.session(&r.session_id)?.lock().unwrap().profile;
        let garment = self
            .catalog
            .get(&r.garment_id)
            .ok_or_else(|| ApiError::UnknownGarment(r.garment_id.clone()))?;
        let base = self
            .store
            .load_image(&r.base_image_id)?
            .ok_or_else(|| ApiError::UnknownImage(r.base_image_id.clone()))?;
        let out = sico_core::try_on(
            &base,
            &profile,
            GarmentInput {
                id: &garment.id,
                meta: garment.metadata,
                image: &garment.image,
            },
            r.size,
            &self.backends,
            &self.pipeline_config(r.seed),
        )
        .map_err(|e| ApiError::Backend(e.to_string()))?;
        Ok(out.image)
    }
}

struct JobFailure {
    kind: String,
    stage: Option<String>,
    message: String,
}

impl JobFailure {
    fn new(kind: &str, message: String) -> Self {
        Self {
            kind: kind.to_string(),
            stage: None,
            message: format!("{kind}: {message}"),
        }
    }
}

fn listing(g: &crate::catalog::GarmentRecord, image_id: &str) -> GarmentListing {
    GarmentListing {
        id: g.id.clone(),
        name: g.name.clone(),
        garment_type: g.metadata.garment_type,
        length: g.metadata.length,
        sizes: g.sizes.clone(),
        image_url: image_url(image_id),
    }
}

fn parse_size(value: Option<&str>, field: &'static str) -> Result<SizeLabel, ApiError> {
    match value.map(str::trim) {
        None | Some("") => Err(ApiError::MissingSize(field)),
        Some(v) => v.parse().map_err(|_| ApiError::InvalidSize(v.to_string())),
    }
}

fn backend_error(e: sico_core::Error) -> ApiError {
    match e {
        sico_core::Error::NoPersonDetected => ApiError::NoPersonDetected,
        other => ApiError::Backend(format!("{}: {other}", other.kind())),
    }
}

fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}
