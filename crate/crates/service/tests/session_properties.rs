mod common;

use std::collections::HashSet;
use std::sync::Arc;

use common::*;
use proptest::prelude::*;
use sico_core::raster;
use sico_service::store::{Store, Table};
use sico_service::{AppState, Catalog, JobRecord, JobStatus, Service, ServiceConfig};

#[derive(Debug, Clone)]
enum Op {
    TryOn { garment: usize, size: usize },
    Continue { pick: usize },
    ContinueForeign,
    View,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        3 => (0usize..6, 0usize..7).prop_map(|(garment, size)| Op::TryOn { garment, size }),
        2 => (0usize..8).prop_map(|pick| Op::Continue { pick }),
        1 => Just(Op::ContinueForeign),
        1 => Just(Op::View),
    ]
}

fn small_service(dir: &tempfile::TempDir) -> Service {
    let (backends, _) = small_backends();
    let mut cfg = ServiceConfig::new(catalog_path(), dir.path());
    cfg.canvas_width = 128;
    cfg.canvas_height = 192;
    let catalog = Catalog::load(&cfg.catalog_path).unwrap();
    Service::with_backends(cfg, catalog, backends).unwrap()
}

fn check_invariants(state: &AppState, sid: &str, prev_history: &[String]) -> Vec<String> {
    let view = state.get_session(sid).unwrap();
    let history: Vec<String> = view.results.iter().map(|r| r.result_id.clone()).collect();
    assert!(history.starts_with(prev_history), "history is append-only");
    let mut allowed: HashSet<&str> = view.results.iter().map(|r| r.image_id.as_str()).collect();
    allowed.insert(view.self_image_id.as_str());
    assert!(
        allowed.contains(view.before_image_id.as_str()),
        "before-image must be the self-image or a result"
    );
    history
}

fn terminal_shape(job: &JobRecord) {
    assert!(job.status.is_terminal());
    assert_eq!(job.status == JobStatus::Done, job.result_id.is_some());
    assert_eq!(job.status == JobStatus::Failed, job.error.is_some());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn before_image_and_history_invariants(ops in proptest::collection::vec(op(), 1..7)) {
        let dir = tempfile::tempdir().unwrap();
        let service = small_service(&dir);
        let state = service.state();
        let upload = png(&small_fixture().image);
        let sid = state.create_session(Some(&upload), Some("M"), Some("S")).unwrap();
        let other = state.create_session(Some(&upload), Some("L"), Some("L")).unwrap();
        let garments = state.list_garments();
        let mut history = Vec::new();

        let foreign_job = state.submit_tryon(&other, "tee-red", "M").unwrap();
        let foreign = wait_job_sync(&state, &foreign_job).result_id.unwrap();

        for op in ops {
            match op {
                Op::TryOn { garment, size } => {
                    let g = &garments[garment];
                    let label = sico_core::SizeLabel::ALL[size];
                    match state.submit_tryon(&sid, &g.id, label.as_str()) {
                        Ok(job) => {
                            let done = wait_job_sync(&state, &job);
                            terminal_shape(&done);
                            prop_assert_eq!(done.status, JobStatus::Done);
                        }
                        Err(e) => prop_assert!(!g.sizes.contains(&label), "{e}"),
                    }
                }
                Op::Continue { pick } => {
                    if !history.is_empty() {
                        let rid: &String = &history[pick % history.len()];
                        state.continue_from(&sid, rid).unwrap();
                        let view = state.get_session(&sid).unwrap();
                        let chosen = view.results.iter().find(|r| &r.result_id == rid).unwrap();
                        prop_assert_eq!(&view.before_image_id, &chosen.image_id);
                    }
                }
                Op::ContinueForeign => {
                    let before = state.get_session(&sid).unwrap().before_image_id;
                    let err = state.continue_from(&sid, &foreign).unwrap_err();
                    prop_assert_eq!(err.code(), "ResultNotInSession");
                    prop_assert_eq!(state.get_session(&sid).unwrap().before_image_id, before);
                }
                Op::View => {}
            }
            history = check_invariants(&state, &sid, &history);
        }

        // replaying every recorded (garment, size, seed, base) reproduces it
        for rid in &history {
            let stored = state.result(rid).unwrap();
            let img = state.store.load_image(&stored.image_id).unwrap().unwrap();
            prop_assert_eq!(raster::content_hash(&state.replay(rid).unwrap()), raster::content_hash(&img));
        }
        service.shutdown();
    }
}

#[test]
fn records_survive_restart_and_interrupted_jobs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let upload = png(&small_fixture().image);
    let (sid, rid) = {
        let service = small_service(&dir);
        let state = service.state();
        let sid = state
            .create_session(Some(&upload), Some("S"), Some("M"))
            .unwrap();
        let job = state.submit_tryon(&sid, "jeans-indigo", "XL").unwrap();
        let rid = wait_job_sync(&state, &job).result_id.unwrap();
        state.continue_from(&sid, &rid).unwrap();
        service.shutdown();
        (sid, rid)
    };
    {
        let store = Store::open(dir.path()).unwrap();
        let mut stuck: JobRecord = store.all::<JobRecord>(Table::Jobs).unwrap().remove(0).1;
        stuck.job_id = "stuck".into();
        stuck.status = JobStatus::Running;
        stuck.result_id = None;
        store.put(Table::Jobs, "stuck", &stuck).unwrap();
    }
    let service = small_service(&dir);
    let state = service.state();
    let view = state.get_session(&sid).unwrap();
    assert_eq!(view.results.len(), 1);
    assert_eq!(view.results[0].result_id, rid);
    assert_eq!(view.before_image_id, view.results[0].image_id);
    assert!(state.image_png(&view.before_image_id).is_ok());
    let stuck = state.get_job("stuck").unwrap();
    terminal_shape(&stuck);
    assert_eq!(stuck.error_kind.as_deref(), Some("Interrupted"));
    let replayed = state.replay(&rid).unwrap();
    assert_eq!(
        Some(replayed),
        state.store.load_image(&view.results[0].image_id).unwrap()
    );
    service.shutdown();
}

#[test]
fn idle_sessions_expire() {
    let dir = tempfile::tempdir().unwrap();
    let service = small_service(&dir);
    let state: Arc<AppState> = service.state();
    let upload = png(&small_fixture().image);
    let sid = state
        .create_session(Some(&upload), Some("S"), Some("M"))
        .unwrap();
    let now = sico_service::model::now_ms();
    assert_eq!(state.sweep_expired(now), 0);
    let ttl = state.config.session_ttl.as_millis() as u64;
    assert_eq!(state.sweep_expired(now + ttl + 10), 1);
    assert_eq!(
        state.get_session(&sid).unwrap_err().code(),
        "UnknownSession"
    );
    service.shutdown();
}

#[test]
fn shutdown_fails_queued_jobs_and_refuses_new_ones() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ServiceConfig::new(catalog_path(), dir.path());
    cfg.canvas_width = 128;
    cfg.canvas_height = 192;
    cfg.workers = 1;
    let (_, fixture) = small_backends();
    let mut reg = sico_core::FixtureRegistry::new();
    reg.register_fixture(fixture.clone()).unwrap();
    let slow = Arc::new(
        sico_core::MockBackends::new(Arc::new(reg))
            .with_delay(std::time::Duration::from_millis(150)),
    );
    let backends = sico_core::Backends::new(slow.clone(), slow.clone(), slow);
    let service =
        Service::with_backends(cfg, Catalog::load(catalog_path()).unwrap(), backends).unwrap();
    let state = service.state();
    let sid = state
        .create_session(Some(&png(&fixture.image)), Some("M"), Some("M"))
        .unwrap();
    let jobs: Vec<String> = (0..3)
        .map(|_| state.submit_tryon(&sid, "tee-red", "L").unwrap())
        .collect();
    while state.get_job(&jobs[0]).unwrap().status == JobStatus::Queued {
        std::thread::sleep(std::time::Duration::from_millis(2));
    }
    service.shutdown();
    assert_eq!(
        state.submit_tryon(&sid, "tee-red", "L").unwrap_err().code(),
        "ShuttingDown"
    );
    let first = state.get_job(&jobs[0]).unwrap();
    terminal_shape(&first);
    assert_eq!(first.status, JobStatus::Done);
    for j in &jobs[1..] {
        let job = state.get_job(j).unwrap();
        terminal_shape(&job);
        assert_eq!(job.status, JobStatus::Failed);
        assert_eq!(job.error_kind.as_deref(), Some("ShuttingDown"));
    }
}
