use std::path::PathBuf;
use std::time::Duration;

use sico_core::BackendConfig;

use crate::error::ConfigError;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub port: u16,
    pub data_dir: PathBuf,
    pub catalog_path: PathBuf,
    /// Subject fixtures registered with the mock backends.
    pub fixture_dirs: Vec<PathBuf>,
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub max_image_dim: u32,
    pub workers: usize,
    pub queue_capacity: usize,
    pub seed: u64,
    pub session_ttl: Duration,
    pub save_intermediates: bool,
    pub backend: BackendConfig,
}

impl ServiceConfig {
    pub fn new(catalog_path: impl Into<PathBuf>, data_dir: impl Into<PathBuf>) -> Self {
        Self {
            port: 8080,
            data_dir: data_dir.into(),
            catalog_path: catalog_path.into(),
            fixture_dirs: Vec::new(),
            canvas_width: 512,
            canvas_height: 768,
            max_image_dim: 4096,
            workers: 2,
            queue_capacity: 16,
            seed: 0,
            session_ttl: Duration::from_secs(24 * 3600),
            save_intermediates: false,
            backend: BackendConfig::default(),
        }
    }

    /// Reads `SICO_*` variables through `var`. `SICO_CATALOG` is required.
    pub fn from_vars(var: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let catalog = var("SICO_CATALOG").ok_or(ConfigError::Missing("SICO_CATALOG"))?;
        let data_dir = var("SICO_DATA_DIR").unwrap_or_else(|| "sico-data".into());
        let mut cfg = Self::new(catalog, data_dir);

        fn num<T: std::str::FromStr>(
            var: &impl Fn(&str) -> Option<String>,
            key: &'static str,
            slot: &mut T,
        ) -> Result<(), ConfigError> {
            if let Some(v) = var(key) {
                *slot = v.trim().parse().map_err(|_| ConfigError::Invalid(key, v))?;
            }
            Ok(())
        }
        num(&var, "SICO_PORT", &mut cfg.port)?;
        num(&var, "SICO_CANVAS_W", &mut cfg.canvas_width)?;
        num(&var, "SICO_CANVAS_H", &mut cfg.canvas_height)?;
        num(&var, "SICO_MAX_IMAGE_DIM", &mut cfg.max_image_dim)?;
        num(&var, "SICO_WORKERS", &mut cfg.workers)?;
        num(&var, "SICO_QUEUE", &mut cfg.queue_capacity)?;
        num(&var, "SICO_SEED", &mut cfg.seed)?;
        let mut ttl_s = cfg.session_ttl.as_secs();
        num(&var, "SICO_SESSION_TTL_S", &mut ttl_s)?;
        cfg.session_ttl = Duration::from_secs(ttl_s);
        if let Some(v) = var("SICO_SAVE_INTERMEDIATES") {
            cfg.save_intermediates = matches!(v.as_str(), "1" | "true" | "yes");
        }
        if let Some(v) = var("SICO_FIXTURES") {
            cfg.fixture_dirs = std::env::split_paths(&v).collect();
        }
        cfg.backend =
            BackendConfig::from_vars(&var).map_err(|e| ConfigError::Backend(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_vars(|k| std::env::var(k).ok())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.canvas_width == 0 || self.canvas_height == 0 {
            return Err(ConfigError::Invalid("canvas", "must be non-zero".into()));
        }
        if self.workers == 0 {
            return Err(ConfigError::Invalid("SICO_WORKERS", "0".into()));
        }
        if self.queue_capacity == 0 {
            return Err(ConfigError::Invalid("SICO_QUEUE", "0".into()));
        }
        self.backend
            .validate()
            .map_err(|e| ConfigError::Backend(e.to_string()))
    }
}
