//! Completion backends.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ccg::SnippetRecord;
use crate::http::{HttpClient, HttpError};
use crate::store::SnippetStore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompleteRequest {
    pub prompt: String,
    pub max_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompleteResponse {
    pub completion: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CompleteError {
    #[error("completer transport failure: {0}")]
    Transport(String),
    #[error("completer rejected the request: {0}")]
    Rejected(String),
}

/// What a completer sees for one request.
pub struct CompletionInput<'a> {
    pub prompt: &'a str,
    pub max_tokens: usize,
    /// Highest-ranked retrieved snippet, if any.
    pub top_snippet: Option<&'a SnippetRecord>,
    pub store: &'a SnippetStore,
}

pub trait Completer: Send + Sync {
    fn complete(&self, input: &CompletionInput<'_>) -> Result<String, CompleteError>;
}

/// `POST /complete` against a model server.
pub struct HttpCompleter {
    client: HttpClient,
}

impl HttpCompleter {
    pub fn new(endpoint: &str) -> Self {
        Self::with_policy(endpoint, Duration::from_secs(60), 2)
    }

    pub fn with_policy(endpoint: &str, timeout: Duration, retries: u32) -> Self {
        Self { client: HttpClient::new(endpoint, timeout, retries) }
    }
}

impl Completer for HttpCompleter {
    fn complete(&self, input: &CompletionInput<'_>) -> Result<String, CompleteError> {
        let request = CompleteRequest { prompt: input.prompt.to_string(), max_tokens: input.max_tokens };
        self.client
            .post_json::<_, CompleteResponse>("/complete", &request)
            .map(|r| r.completion)
            .map_err(|e| match e {
                HttpError::Status { .. } => CompleteError::Rejected(e.to_string()),
                HttpError::Transport { .. } | HttpError::Decode(_) => CompleteError::Transport(e.to_string()),
            })
    }
}

/// Offline stub: answers with the source line following the top snippet's
/// anchor statement, or an empty string.
pub struct EchoCompleter;

impl Completer for EchoCompleter {
    fn complete(&self, input: &CompletionInput<'_>) -> Result<String, CompleteError> {
        let next = input.top_snippet.and_then(|top| {
            let line = top.anchor_end_line()? as usize;
            input.store.graph(&top.file)?.lines.get(line).cloned()
        });
        Ok(next.map(|l| l.trim().to_string()).unwrap_or_default())
    }
}
