//! Chat-completion gateway.
//!
//! [`ChatBackend`] is the one interface the pipeline talks to. Two
//! implementations ship here: [`HttpBackend`] for any endpoint speaking the
//! common chat-completion JSON protocol, and [`MockBackend`], which answers
//! offline with deterministic, well-formed MCQ JSON.

mod http;
mod mock;

use std::time::Duration;

use async_trait::async_trait;
use quizforge_core::{GenerationParams, QuestionType};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpBackend, RetryPolicy, API_BASE_ENV, API_KEY_ENV, DEFAULT_API_BASE};
pub use mock::{mock_generate, MockBackend};

/// Identifies what a request is for. Never sent over the wire; the mock
/// backend keys its output on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RequestMeta {
    pub lo_id: String,
    pub question_type: QuestionType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub system: String,
    pub user: String,
    pub params: GenerationParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<RequestMeta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompletionResult {
    pub raw_text: String,
    pub latency: Duration,
    pub backend: BackendKind,
    /// 1-based attempt that succeeded.
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("transport error after {attempts} attempts: {detail}")]
    Transport { attempts: u32, detail: String },
    #[error("request timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("endpoint rejected the request with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("unexpected response: {0}")]
    BadResponse(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[async_trait]
pub trait ChatBackend: Send + Sync {
    fn kind(&self) -> BackendKind;

    /// Send one request. Returns the model text unparsed.
    async fn complete(&self, req: &CompletionRequest) -> Result<CompletionResult, GatewayError>;
}
