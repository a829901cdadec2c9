use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{decode_image, Image};

/// Environment variable consulted for the generation endpoint.
pub const ENDPOINT_ENV: &str = "SHEETREFINE_GEN_ENDPOINT";

const BODY_EXCERPT_LEN: usize = 200;

/// Body of the POST sent to the generation service.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenRequest {
    pub prompt: String,
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub steps: u32,
    /// Classifier-free guidance scale.
    pub guidance: f64,
}

impl GenRequest {
    pub fn new(prompt: impl Into<String>, seed: u64) -> Self {
        Self { prompt: prompt.into(), seed, width: 1024, height: 1024, steps: 30, guidance: 7.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.prompt.trim().is_empty() {
            return Err(Error::InvalidArgument("prompt must not be empty".into()));
        }
        if self.width < 64 || self.height < 64 {
            return Err(Error::InvalidArgument(format!(
                "generation size must be at least 64x64, got {}x{}",
                self.width, self.height
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be >= 1".into()));
        }
        if !(self.guidance >= 1.0 && self.guidance.is_finite()) {
            return Err(Error::InvalidArgument(format!("guidance must be >= 1, got {}", self.guidance)));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct JsonImage {
    image_b64: String,
}

/// Blocking client for a text-to-image HTTP service.
///
/// The service receives a JSON [`GenRequest`] and answers either with PNG
/// bytes or with `{"image_b64": "..."}`. The client is `Send + Sync`.
#[derive(Clone, Debug)]
pub struct GenClient {
    endpoint: String,
    http: reqwest::blocking::Client,
    retries: u32,
}

impl GenClient {
    pub fn new(endpoint: impl Into<String>, timeout: Duration, retries: u32) -> Result<Self> {
        let endpoint = endpoint.into();
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Network { endpoint: endpoint.clone(), reason: e.to_string() })?;
        Ok(Self { endpoint, http, retries: retries.min(1) })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn generate(&self, req: &GenRequest) -> Result<Image> {
        req.validate()?;
        let mut attempt = 0;
        loop {
            match self.attempt(req) {
                Err(e @ (Error::Network { .. } | Error::Service { status: 500..=599, .. }))
                    if attempt < self.retries =>
                {
                    log::warn!("generation attempt {} failed: {e}; retrying", attempt + 1);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn attempt(&self, req: &GenRequest) -> Result<Image> {
        let network = |e: reqwest::Error| Error::Network { endpoint: self.endpoint.clone(), reason: e.to_string() };
        let resp = self.http.post(&self.endpoint).json(req).send().map_err(network)?;
        let status = resp.status();
        let content_type = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or("")
            .to_ascii_lowercase();
        let body = resp.bytes().map_err(network)?;

        if !status.is_success() {
            let text = String::from_utf8_lossy(&body);
            let excerpt: String = text.chars().take(BODY_EXCERPT_LEN).collect();
            return Err(Error::Service { status: status.as_u16(), body: excerpt });
        }

        let source_id = format!("{}#seed={}", self.endpoint, req.seed);
        if content_type.starts_with("application/json") {
            let parsed: JsonImage =
                serde_json::from_slice(&body).map_err(|e| Error::Payload(format!("bad JSON body: {e}")))?;
            let bytes = base64::engine::general_purpose::STANDARD
                .decode(parsed.image_b64.trim())
                .map_err(|e| Error::Payload(format!("bad base64 image: {e}")))?;
            decode_image(&bytes, &source_id).map_err(|e| Error::Payload(e.to_string()))
        } else {
            decode_image(&body, &source_id).map_err(|e| Error::Payload(e.to_string()))
        }
    }
}

/// One-shot request with a 120 s timeout and a single retry.
pub fn request_grid(endpoint: &str, req: &GenRequest) -> Result<Image> {
    GenClient::new(endpoint, Duration::from_secs(120), 1)?.generate(req)
}
