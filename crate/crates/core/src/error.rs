use std::fmt;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("mask is empty")]
    EmptyMask,
    #[error("dimension mismatch: expected {expected:?}, got {actual:?} (width, height)")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },
    #[error("no person detected in the image")]
    NoPersonDetected,
    #[error("no fixture registered for image {0}")]
    UnknownFixture(String),
    #[error("invalid size label `{0}`")]
    InvalidSize(String),
    #[error("invalid garment metadata: {0}")]
    InvalidMetadata(String),
    #[error("invalid label map: {0}")]
    InvalidLabelMap(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("backend protocol error: {0}")]
    BackendProtocol(String),
    #[error("backend rejected request: {0}")]
    BackendRejected(String),
    #[error("operation cancelled")]
    Cancelled,
    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Variant name, stable for machine consumers.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyMask => "EmptyMask",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NoPersonDetected => "NoPersonDetected",
            Error::UnknownFixture(_) => "UnknownFixture",
            Error::InvalidSize(_) => "InvalidSize",
            Error::InvalidMetadata(_) => "InvalidMetadata",
            Error::InvalidLabelMap(_) => "InvalidLabelMap",
            Error::InvalidImage(_) => "InvalidImage",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::BackendUnavailable(_) => "BackendUnavailable",
            Error::BackendProtocol(_) => "BackendProtocol",
            Error::BackendRejected(_) => "BackendRejected",
            Error::Cancelled => "Cancelled",
            Error::Image(_) => "Image",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dims(expected: (u32, u32), actual: (u32, u32)) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// Pipeline stage an error was raised in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Parse,
    Remove,
    RegularFit,
    SizeAdjust,
    Generate,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Parse => "parse",
            Stage::Remove => "remove",
            Stage::RegularFit => "regular-fit",
            Stage::SizeAdjust => "size-adjust",
            Stage::Generate => "generate",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A try-on failure tagged with the stage that produced it.
#[derive(Error, Debug)]
#[error("{stage} stage failed: {source}")]
pub struct TryOnError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

pub(crate) trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, TryOnError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> Result<T, TryOnError> {
        self.map_err(|source| TryOnError { stage, source })
    }
}
