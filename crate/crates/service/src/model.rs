use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sico_core::{Provenance, SizeLabel, UserProfile};

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub id: String,
    pub profile: UserProfile,
    pub self_image_id: String,
    pub before_image_id: String,
    /// Result ids, oldest first. Append-only.
    pub results: Vec<String>,
    pub created_at: u64,
    pub last_access: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub id: String,
    pub session_id: String,
    pub job_id: String,
    pub garment_id: String,
    pub size: SizeLabel,
    pub seed: u64,
    /// The before-image the try-on ran against.
    pub base_image_id: String,
    pub image_id: String,
    pub provenance: Provenance,
    /// Intermediate image ids by name, present when intermediates are saved.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub intermediates: BTreeMap<String, String>,
    pub created_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }

    /// Allowed moves: queued to running or failed, running to done or failed.
    pub fn can_become(self, next: JobStatus) -> bool {
        matches!(
            (self, next),
            (JobStatus::Queued, JobStatus::Running)
                | (JobStatus::Queued, JobStatus::Failed)
                | (JobStatus::Running, JobStatus::Done)
                | (JobStatus::Running, JobStatus::Failed)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: String,
    pub session_id: String,
    pub garment_id: String,
    pub size: SizeLabel,
    pub seed: u64,
    pub base_image_id: String,
    pub status: JobStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Error variant name, e.g. `BackendUnavailable`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<String>,
    /// Pipeline stage that failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    pub created_at: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub started_at: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultView {
    pub result_id: String,
    pub image_id: String,
    pub image_url: String,
    pub base_image_id: String,
    pub garment_id: String,
    pub size: SizeLabel,
    pub true_size: SizeLabel,
    pub delta: i32,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub intermediates: BTreeMap<String, String>,
    pub created_at: u64,
}

impl ResultView {
    pub fn of(r: &ResultRecord) -> Self {
        Self {
            result_id: r.id.clone(),
            image_id: r.image_id.clone(),
            image_url: image_url(&r.image_id),
            base_image_id: r.base_image_id.clone(),
            garment_id: r.garment_id.clone(),
            size: r.size,
            true_size: r.provenance.true_size,
            delta: r.provenance.delta,
            seed: r.seed,
            intermediates: r.intermediates.clone(),
            created_at: r.created_at,
        }
    }
}

/// Body of `GET /api/sessions/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub profile: UserProfile,
    pub self_image_id: String,
    pub before_image_id: String,
    pub before_image_url: String,
    /// Oldest first.
    pub results: Vec<ResultView>,
}

pub fn image_url(id: &str) -> String {
    format!("/api/images/{id}")
}
