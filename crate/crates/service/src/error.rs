use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum ConfigError {
    #[error("missing required setting {0}")]
    Missing(&'static str),
    #[error("invalid value for {0}: `{1}`")]
    Invalid(&'static str, String),
    #[error("backend configuration: {0}")]
    Backend(String),
}

#[derive(Error, Debug)]
pub enum CatalogError {
    #[error("cannot read catalog {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed catalog: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate garment id `{0}`")]
    DuplicateId(String),
    #[error("garment `{0}` offers no sizes")]
    NoSizes(String),
    #[error("garment `{id}` image: {message}")]
    Image { id: String, message: String },
}

#[derive(Error, Debug)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("fixture {path}: {source}")]
    Fixture {
        path: String,
        source: sico_core::Error,
    },
    #[error(transparent)]
    Store(#[from] crate::store::StoreError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] sico_core::Error),
}

/// Errors surfaced to API clients, each with a fixed status code.
#[derive(Error, Debug)]
pub enum ApiError {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("missing size field `{0}`")]
    MissingSize(&'static str),
    #[error("invalid size `{0}`")]
    InvalidSize(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("no person detected in the uploaded image")]
    NoPersonDetected,
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown garment `{0}`")]
    UnknownGarment(String),
    #[error("unknown job `{0}`")]
    UnknownJob(String),
    #[error("unknown result `{0}`")]
    UnknownResult(String),
    #[error("unknown image `{0}`")]
    UnknownImage(String),
    #[error("size {size} is not offered for `{garment}`")]
    SizeNotOffered { garment: String, size: String },
    #[error("result `{0}` belongs to another session")]
    ResultNotInSession(String),
    #[error("try-on queue is full")]
    QueueFull,
    #[error("service is shutting down")]
    ShuttingDown,
    #[error("backend error: {0}")]
    Backend(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::InvalidImage(_) => "InvalidImage",
            ApiError::MissingSize(_) => "MissingSize",
            ApiError::InvalidSize(_) => "InvalidSize",
            ApiError::BadRequest(_) => "BadRequest",
            ApiError::NoPersonDetected => "NoPersonDetected",
            ApiError::UnknownSession(_) => "UnknownSession",
            ApiError::UnknownGarment(_) => "UnknownGarment",
            ApiError::UnknownJob(_) => "UnknownJob",
            ApiError::UnknownResult(_) => "UnknownResult",
            ApiError::UnknownImage(_) => "UnknownImage",
            ApiError::SizeNotOffered { .. } => "SizeNotOffered",
            ApiError::ResultNotInSession(_) => "ResultNotInSession",
            ApiError::QueueFull => "QueueFull",
            ApiError::ShuttingDown => "ShuttingDown",
            ApiError::Backend(_) => "BackendError",
            ApiError::Internal(_) => "Internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::InvalidImage(_)
            | ApiError::MissingSize(_)
            | ApiError::InvalidSize(_)
            | ApiError::BadRequest(_)
            | ApiError::SizeNotOffered { .. } => StatusCode::BAD_REQUEST,
            ApiError::NoPersonDetected => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::UnknownSession(_)
            | ApiError::UnknownGarment(_)
            | ApiError::UnknownJob(_)
            | ApiError::UnknownResult(_)
            | ApiError::UnknownImage(_) => StatusCode::NOT_FOUND,
            ApiError::ResultNotInSession(_) => StatusCode::CONFLICT,
            ApiError::QueueFull | ApiError::ShuttingDown => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::Backend(_) => StatusCode::BAD_GATEWAY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::Internal(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            tracing::warn!(error = %self, "request failed");
        }
        let body = json!({ "error": self.code(), "message": self.to_string() });
        (self.status(), Json(body)).into_response()
    }
}
