//! Minimal blocking JSON-over-HTTP client shared by the remote embedding
//! provider and the completer.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use ureq::Agent;

#[derive(Debug, thiserror::Error)]
pub enum HttpError {
    #[error("{url}: transport failure after {retries} retries: {message}")]
    Transport { url: String, retries: u32, message: String },
    #[error("status {status}: {message}")]
    Status { status: u16, message: String },
    #[error("undecodable response: {0}")]
    Decode(String),
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
}

#[derive(Debug, Clone)]
pub struct HttpClient {
    agent: Agent,
    base: String,
    retries: u32,
}

impl HttpClient {
    pub fn new(base: &str, timeout: Duration, retries: u32) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent, base: base.trim_end_matches('/').to_string(), retries }
    }

    /// GETs `path` and decodes the JSON body, with the same retry policy as
    /// [`post_json`](Self::post_json).
    pub fn get_json<R: DeserializeOwned>(&self, path: &str) -> Result<R, HttpError> {
        self.request(path, |agent, url| agent.get(url).call())
    }

    /// POSTs `body` as JSON to `path`. Transport failures and 5xx responses
    /// are retried up to the configured count; 4xx responses are not.
    pub fn post_json<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, HttpError> {
        self.request(path, |agent, url| agent.post(url).send_json(body))
    }

    fn request<R, F>(&self, path: &str, send: F) -> Result<R, HttpError>
    where
        R: DeserializeOwned,
        F: Fn(&Agent, &str) -> Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    {
        let url = format!("{}{}", self.base, path);
        let mut last_error = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                log::debug!("retrying {url} (attempt {})", attempt + 1);
            }
            let mut response = match send(&self.agent, &url) {
                Ok(r) => r,
                Err(e) => {
                    last_error = e.to_string();
                    continue;
                }
            };
            let status = response.status().as_u16();
            let text = response.body_mut().read_to_string().map_err(|e| HttpError::Decode(e.to_string()));
            if status >= 500 {
                last_error = format!("status {status}: {}", error_message(text.as_deref().unwrap_or("")));
                continue;
            }
            let text = text?;
            if status >= 400 {
                return Err(HttpError::Status { status, message: error_message(&text) });
            }
            return serde_json::from_str(&text).map_err(|e| HttpError::Decode(e.to_string()));
        }
        Err(HttpError::Transport { url, retries: self.retries, message: last_error })
    }
}

fn error_message(body: &str) -> String {
    serde_json::from_str::<ErrorBody>(body).map(|b| b.error).unwrap_or_else(|_| body.to_string())
}
