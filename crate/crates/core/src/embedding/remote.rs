use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EMBEDDING_DIM, EmbedError, EmbeddingProvider, EmbeddingVector};
use crate::http::{HttpClient, HttpError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_RETRIES: u32 = 2;

/// Body of `POST /embed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

/// Successful `POST /embed` response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
}

/// Error body returned with status >= 400.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

/// `GET /health` response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthStatus {
    pub status: String,
    pub dim: usize,
    #[serde(flatten)]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

/// Texts per `/embed` request; the service rejects larger batches.
pub const MAX_BATCH: usize = 64;

/// Client for an HTTP embedding service.
#[derive(Debug, Clone)]
pub struct RemoteProvider {
    client: HttpClient,
    tag: String,
}

impl RemoteProvider {
    /// `endpoint` is the service base URL, e.g. `http://127.0.0.1:8080`.
    pub fn new(endpoint: &str) -> Self {
        Self::with_policy(endpoint, DEFAULT_TIMEOUT, DEFAULT_RETRIES)
    }

    pub fn with_policy(endpoint: &str, timeout: Duration, retries: u32) -> Self {
        Self { client: HttpClient::new(endpoint, timeout, retries), tag: format!("remote:{}", endpoint.trim_end_matches('/')) }
    }

    /// Queries `/health` and checks the advertised dimension.
    pub fn health(&self) -> Result<HealthStatus, EmbedError> {
        let health: HealthStatus = self.client.get_json("/health").map_err(embed_error)?;
        if health.dim != EMBEDDING_DIM {
            return Err(EmbedError::Protocol(format!("service reports dim {}, expected {EMBEDDING_DIM}", health.dim)));
        }
        Ok(health)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let request = EmbedRequest { texts: texts.to_vec() };
        let response: EmbedResponse = self.client.post_json("/embed", &request).map_err(embed_error)?;
        if response.vectors.len() != texts.len() {
            return Err(EmbedError::Protocol(format!(
                "{} vectors for {} texts",
                response.vectors.len(),
                texts.len()
            )));
        }
        // Renormalize in f64; services serialize float32 values.
        response.vectors.into_iter().map(|v| EmbeddingVector::normalized(v, self.tag.clone())).collect()
    }
}

fn embed_error(e: HttpError) -> EmbedError {
    match e {
        HttpError::Transport { url, retries, message } => EmbedError::Transport { endpoint: url, retries, message },
        HttpError::Status { status, message } => EmbedError::Remote { status, message },
        HttpError::Decode(m) => EmbedError::Protocol(m),
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(MAX_BATCH) {
            out.extend(self.embed_batch(chunk)?);
        }
        Ok(out)
    }
}
