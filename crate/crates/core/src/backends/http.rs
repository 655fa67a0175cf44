//! JSON-over-HTTP adapters. Images travel as base64-encoded PNG.
//!
//! ```text
//! POST {seg_url}/parse        {"image"} -> {"labels", "table"}
//! POST {sam_url}/segment      {"image", "points", "box"} -> {"mask"}
//! POST {inpaint_url}/inpaint  {"image", "mask", "edges", "reference", "prompt"} -> {"image"}
//! ```

use std::collections::BTreeMap;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{BodyParser, InpaintRequest, Inpainter, ObjectSegmenter};
use crate::error::{Error, Result};
use crate::maskops::{BinaryMask, Point, Rect};
use crate::raster::{self, RgbImage};
use crate::segmentation::LabelMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpEndpoints {
    pub seg_url: String,
    pub sam_url: String,
    pub inpaint_url: String,
}

pub struct HttpBackends {
    endpoints: HttpEndpoints,
    agent: ureq::Agent,
    retries: u32,
}

impl std::fmt::Debug for HttpBackends {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackends")
            .field("endpoints", &self.endpoints)
            .field("retries", &self.retries)
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
pub struct ParseRequest {
    pub image: String,
}

#[derive(Serialize, Deserialize)]
pub struct ParseResponse {
    pub labels: String,
    pub table: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
pub struct SegmentRequest {
    pub image: String,
    pub points: Vec<Point>,
    #[serde(rename = "box")]
    pub bbox: Rect,
}

#[derive(Serialize, Deserialize)]
pub struct SegmentResponse {
    pub mask: String,
}

#[derive(Serialize, Deserialize)]
pub struct InpaintWireRequest {
    pub image: String,
    pub mask: String,
    pub edges: String,
    pub reference: Option<String>,
    pub prompt: String,
}

#[derive(Serialize, Deserialize)]
pub struct InpaintResponse {
    pub image: String,
}

pub fn b64_png(img: &RgbImage) -> String {
    B64.encode(raster::encode_png(img))
}

pub fn b64_mask(mask: &BinaryMask) -> String {
    B64.encode(mask.to_png())
}

fn unb64(field: &str, s: &str) -> Result<Vec<u8>> {
    B64.decode(s)
        .map_err(|e| Error::BackendProtocol(format!("`{field}` is not valid base64: {e}")))
}

fn protocol<E: std::fmt::Display>(what: &'static str) -> impl FnOnce(E) -> Error {
    move |e| Error::BackendProtocol(format!("{what}: {e}"))
}

fn expect_dims(what: &str, expected: (u32, u32), actual: (u32, u32)) -> Result<()> {
    if expected != actual {
        return Err(Error::BackendProtocol(format!(
            "{what} is {}x{}, expected {}x{}",
            actual.0, actual.1, expected.0, expected.1
        )));
    }
    Ok(())
}

impl HttpBackends {
    /// Each request may take up to `timeout` and is attempted `retries + 1`
    /// times when the connection fails or times out.
    pub fn new(endpoints: HttpEndpoints, timeout: Duration, retries: u32) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(timeout)
            .timeout_connect(timeout)
            .build();
        Self {
            endpoints,
            agent,
            retries,
        }
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        base: &str,
        path: &str,
        body: &Req,
    ) -> Result<Resp> {
        let url = format!("{}/{}", base.trim_end_matches('/'), path);
        let body = serde_json::to_value(body)?;
        let mut last = String::new();
        for attempt in 0..=self.retries {
            match self.agent.post(&url).send_json(body.clone()) {
                Ok(resp) => {
                    return resp.into_json::<Resp>().map_err(|e| {
                        Error::BackendProtocol(format!("{url}: malformed response: {e}"))
                    });
                }
                Err(ureq::Error::Status(code, resp)) => {
                    let msg = resp.into_string().unwrap_or_default();
                    return Err(Error::BackendRejected(format!(
                        "{url} returned {code}: {msg}"
                    )));
                }
                Err(ureq::Error::Transport(t)) => {
                    tracing::warn!(%url, attempt, error = %t, "backend request failed");
                    last = t.to_string();
                }
            }
        }
        Err(Error::BackendUnavailable(format!(
            "{url} after {} attempt(s): {last}",
            self.retries + 1
        )))
    }
}

impl BodyParser for HttpBackends {
    fn parse(&self, image: &RgbImage) -> Result<LabelMap> {
        let resp: ParseResponse = self.post(
            &self.endpoints.seg_url,
            "parse",
            &ParseRequest {
                image: b64_png(image),
            },
        )?;
        let png = unb64("labels", &resp.labels)?;
        let table = serde_json::to_string(&resp.table)?;
        let labels = LabelMap::from_png_and_table(&png, &table).map_err(protocol("labels"))?;
        expect_dims("label map", image.dimensions(), labels.dims())?;
        Ok(labels)
    }
}

impl ObjectSegmenter for HttpBackends {
    fn segment(&self, image: &RgbImage, points: &[Point], bbox: Rect) -> Result<BinaryMask> {
        let resp: SegmentResponse = self.post(
            &self.endpoints.sam_url,
            "segment",
            &SegmentRequest {
                image: b64_png(image),
                points: points.to_vec(),
                bbox,
            },
        )?;
        let mask = BinaryMask::from_png(&unb64("mask", &resp.mask)?).map_err(protocol("mask"))?;
        expect_dims("mask", image.dimensions(), mask.dims())?;
        let (w, h) = image.dimensions();
        mask.intersect(&bbox.to_mask(w, h))
    }
}

impl Inpainter for HttpBackends {
    fn inpaint(&self, req: &InpaintRequest<'_>) -> Result<RgbImage> {
        let resp: InpaintResponse = self.post(
            &self.endpoints.inpaint_url,
            "inpaint",
            &InpaintWireRequest {
                image: b64_png(req.base),
                mask: b64_mask(req.mask),
                edges: b64_mask(req.edge_guidance),
                reference: req.reference.map(b64_png),
                prompt: req.prompt.to_string(),
            },
        )?;
        let out = raster::decode_image(&unb64("image", &resp.image)?).map_err(protocol("image"))?;
        expect_dims("inpainted image", req.base.dimensions(), out.dimensions())?;
        Ok(raster::composite(req.base, &out, req.mask))
    }
}
