//! HTTP service around the try-on engine: garment catalog, shopper sessions,
//! queued try-on jobs on a bounded worker pool, result history and
//! continue-from-here.

pub mod api;
pub mod catalog;
pub mod config;
pub mod error;
pub mod model;
pub mod state;
pub mod store;

use std::future::Future;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use sico_core::{Backends, FixtureRegistry};

pub use catalog::{Catalog, GarmentListing, GarmentRecord};
pub use config::ServiceConfig;
pub use error::{ApiError, CatalogError, ConfigError, StartupError};
pub use model::{JobRecord, JobStatus, ResultRecord, ResultView, SessionRecord, SessionView};
pub use state::AppState;

/// A started service: shared state plus its worker threads.
pub struct Service {
    state: Arc<AppState>,
    workers: Vec<JoinHandle<()>>,
}

impl Service {
    /// Loads the catalog and fixtures, builds the configured backends and
    /// starts the workers. Any invalid input aborts startup.
    pub fn start(config: ServiceConfig) -> Result<Self, StartupError> {
        config.validate()?;
        let catalog = Catalog::load(&config.catalog_path)?;
        let mut registry = FixtureRegistry::new();
        for dir in &config.fixture_dirs {
            load_fixture_tree(&mut registry, dir)?;
        }
        let backends = config.backend.build(Arc::new(registry))?;
        Self::with_backends(config, catalog, backends)
    }

    pub fn with_backends(
        config: ServiceConfig,
        catalog: Catalog,
        backends: Backends,
    ) -> Result<Self, StartupError> {
        config.validate()?;
        let workers = config.workers;
        let (tx, rx) = crossbeam_channel::bounded::<String>(config.queue_capacity);
        let state = Arc::new(AppState::open(config, catalog, backends)?);
        state.attach_queue(tx);
        let workers = (0..workers)
            .map(|i| {
                let rx = rx.clone();
                let state = state.clone();
                std::thread::Builder::new()
                    .name(format!("sico-worker-{i}"))
                    .spawn(move || {
                        for job in rx.iter() {
                            state.run_job(&job);
                        }
                    })
                    .map_err(StartupError::Io)
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { state, workers })
    }

    pub fn state(&self) -> Arc<AppState> {
        self.state.clone()
    }

    pub fn router(&self) -> axum::Router {
        api::router(self.state.clone())
    }

    /// Closes the queue, fails queued jobs, lets running ones finish and
    /// joins the workers. Blocking.
    pub fn shutdown(self) {
        self.state.begin_shutdown();
        for w in self.workers {
            let _ = w.join();
        }
        tracing::info!("workers stopped");
    }
}

/// Registers `dir` if it holds a fixture (an `image.png`), otherwise every
/// immediate subdirectory that does.
pub fn load_fixture_tree(
    registry: &mut FixtureRegistry,
    dir: &Path,
) -> Result<usize, StartupError> {
    let fixture_err = |source| StartupError::Fixture {
        path: dir.display().to_string(),
        source,
    };
    if dir.join("image.png").is_file() {
        registry.load_dir(dir).map_err(fixture_err)?;
        return Ok(1);
    }
    let mut subdirs: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("image.png").is_file())
        .collect();
    subdirs.sort();
    for sub in &subdirs {
        registry
            .load_dir(sub)
            .map_err(|source| StartupError::Fixture {
                path: sub.display().to_string(),
                source,
            })?;
    }
    Ok(subdirs.len())
}

/// Serves on `listener` until `signal` resolves, then drains the workers.
pub async fn serve(
    service: Service,
    listener: tokio::net::TcpListener,
    signal: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let state = service.state();
    let sweeper = tokio::spawn(sweep_loop(state.clone()));
    let drain = state.clone();
    axum::serve(listener, service.router())
        .with_graceful_shutdown(async move {
            signal.await;
            tracing::info!("shutdown requested");
            drain.begin_shutdown();
        })
        .await?;
    sweeper.abort();
    tokio::task::spawn_blocking(move || service.shutdown())
        .await
        .map_err(std::io::Error::other)
}

/// Binds the configured port and serves until SIGINT or SIGTERM.
pub async fn run(config: ServiceConfig) -> Result<(), StartupError> {
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let service = tokio::task::spawn_blocking(move || Service::start(config))
        .await
        .map_err(|e| StartupError::Io(std::io::Error::other(e)))??;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    serve(service, listener, shutdown_signal()).await?;
    Ok(())
}

pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}

async fn sweep_loop(state: Arc<AppState>) {
    let period =
        (state.config.session_ttl / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
    let mut tick = tokio::time::interval(period);
    tick.tick().await;
    loop {
        tick.tick().await;
        let st = state.clone();
        let _ = tokio::task::spawn_blocking(move || st.sweep_expired(model::now_ms())).await;
    }
}
