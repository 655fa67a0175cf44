use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Backends, FixtureRegistry, HttpBackends, HttpEndpoints, MockBackends};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    #[default]
    Mock,
    Http,
}

impl FromStr for BackendMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mock" => Ok(BackendMode::Mock),
            "http" => Ok(BackendMode::Http),
            other => Err(Error::InvalidArgument(format!(
                "unknown backend mode `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub mode: BackendMode,
    pub seg_url: Option<String>,
    pub sam_url: Option<String>,
    pub inpaint_url: Option<String>,
    pub timeout_s: f64,
    pub retries: u32,
    /// Artificial latency for mock inpainting, in milliseconds.
    pub mock_delay_ms: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            mode: BackendMode::Mock,
            seg_url: None,
            sam_url: None,
            inpaint_url: None,
            timeout_s: 120.0,
            retries: 2,
            mock_delay_ms: 0,
        }
    }
}

impl BackendConfig {
    /// Reads `SICO_BACKEND_MODE`, `SICO_SEG_URL`, `SICO_SAM_URL`,
    /// `SICO_INPAINT_URL`, `SICO_BACKEND_TIMEOUT_S`, `SICO_BACKEND_RETRIES`
    /// and `SICO_MOCK_DELAY_MS` through `var`.
    pub fn from_vars(var: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(mode) = var("SICO_BACKEND_MODE") {
            cfg.mode = mode.parse()?;
        }
        cfg.seg_url = var("SICO_SEG_URL").filter(|s| !s.is_empty());
        cfg.sam_url = var("SICO_SAM_URL").filter(|s| !s.is_empty());
        cfg.inpaint_url = var("SICO_INPAINT_URL").filter(|s| !s.is_empty());
        if let Some(t) = var("SICO_BACKEND_TIMEOUT_S") {
            cfg.timeout_s = t
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad SICO_BACKEND_TIMEOUT_S `{t}`")))?;
        }
        if let Some(r) = var("SICO_BACKEND_RETRIES") {
            cfg.retries = r
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad SICO_BACKEND_RETRIES `{r}`")))?;
        }
        if let Some(d) = var("SICO_MOCK_DELAY_MS") {
            cfg.mock_delay_ms = d
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad SICO_MOCK_DELAY_MS `{d}`")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_env() -> Result<Self> {
        Self::from_vars(|k| std::env::var(k).ok())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(Error::InvalidArgument(
                "backend timeout must be positive".into(),
            ));
        }
        if self.mode == BackendMode::Http {
            for (name, url) in [
                ("SICO_SEG_URL", &self.seg_url),
                ("SICO_SAM_URL", &self.sam_url),
                ("SICO_INPAINT_URL", &self.inpaint_url),
            ] {
                if url.is_none() {
                    return Err(Error::InvalidArgument(format!("http mode requires {name}")));
                }
            }
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s)
    }

    /// Instantiates the configured backends. The registry is only consulted in mock mode.
    pub fn build(&self, registry: Arc<FixtureRegistry>) -> Result<Backends> {
        self.validate()?;
        match self.mode {
            BackendMode::Mock => {
                let m = Arc::new(
                    MockBackends::new(registry)
                        .with_delay(Duration::from_millis(self.mock_delay_ms)),
                );
                Ok(Backends::new(m.clone(), m.clone(), m))
            }
            BackendMode::Http => {
                let endpoints = HttpEndpoints {
                    seg_url: self.seg_url.clone().unwrap_or_default(),
                    sam_url: self.sam_url.clone().unwrap_or_default(),
                    inpaint_url: self.inpaint_url.clone().unwrap_or_default(),
                };
                let h = Arc::new(HttpBackends::new(endpoints, self.timeout(), self.retries));
                Ok(Backends::new(h.clone(), h.clone(), h))
            }
        }
    }
}
