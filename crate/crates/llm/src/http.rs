use std::time::{Duration, Instant};

use async_trait::async_trait;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use crate::{BackendKind, ChatBackend, CompletionRequest, CompletionResult, GatewayError};

pub const API_KEY_ENV: &str = "QUIZFORGE_API_KEY";
pub const API_BASE_ENV: &str = "QUIZFORGE_API_BASE";
pub const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";

/// Exponential backoff: attempt `n` (1-based) waits `base * 2^(n-1)` before
/// the next try, capped at `max_delay`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    pub fn delay_after(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: [WireMessage<'a>; 2],
    temperature: f64,
    top_p: f64,
    frequency_penalty: f64,
    presence_penalty: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireReply,
}

#[derive(Deserialize)]
struct WireReply {
    content: Option<String>,
}

enum Failure {
    Retry(GatewayError, Option<Duration>),
    Fatal(GatewayError),
}

pub struct HttpBackend {
    client: reqwest::Client,
    endpoint: String,
    api_key: String,
    retry: RetryPolicy,
}

impl HttpBackend {
    pub fn new(api_base: &str, api_key: &str) -> Result<Self, GatewayError> {
        if api_key.trim().is_empty() {
            return Err(GatewayError::Auth(format!("{API_KEY_ENV} is empty")));
        }
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| GatewayError::Transport {
                attempts: 0,
                detail: e.to_string(),
            })?;
        Ok(Self {
            client,
            endpoint: format!("{}/chat/completions", api_base.trim_end_matches('/')),
            api_key: api_key.to_string(),
            retry: RetryPolicy::default(),
        })
    }

    /// Build from explicit values as they would come from the environment.
    pub fn from_env_values(api_key: Option<String>, api_base: Option<String>) -> Result<Self, GatewayError> {
        let key = api_key.ok_or_else(|| GatewayError::Auth(format!("{API_KEY_ENV} is not set")))?;
        Self::new(api_base.as_deref().unwrap_or(DEFAULT_API_BASE), &key)
    }

    pub fn from_env() -> Result<Self, GatewayError> {
        Self::from_env_values(
            std::env::var(API_KEY_ENV).ok(),
            std::env::var(API_BASE_ENV).ok(),
        )
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Result<Self, GatewayError> {
        self.client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::Transport {
                attempts: 0,
                detail: e.to_string(),
            })?;
        Ok(self)
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    async fn attempt(&self, req: &CompletionRequest, n: u32) -> Result<String, Failure> {
        let p = &req.params;
        let body = WireRequest {
            model: &p.model,
            messages: [
                WireMessage {
                    role: "system",
                    content: &req.system,
                },
                WireMessage {
                    role: "user",
                    content: &req.user,
                },
            ],
            temperature: p.temperature,
            top_p: p.top_p,
            frequency_penalty: p.frequency_penalty,
            presence_penalty: p.presence_penalty,
            max_tokens: p.max_tokens,
        };
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .await
            .map_err(|e| {
                if e.is_timeout() {
                    Failure::Retry(GatewayError::Timeout { attempts: n }, None)
                } else {
                    Failure::Retry(
                        GatewayError::Transport {
                            attempts: n,
                            detail: e.to_string(),
                        },
                        None,
                    )
                }
            })?;

        let status = resp.status();
        if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
            let body = resp.text().await.unwrap_or_default();
            return Err(Failure::Fatal(GatewayError::Auth(format!("{status}: {body}"))));
        }
        if status == StatusCode::TOO_MANY_REQUESTS {
            let wait = resp
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Err(Failure::Retry(GatewayError::RateLimited { attempts: n }, wait));
        }
        if status.is_server_error() {
            return Err(Failure::Retry(
                GatewayError::Transport {
                    attempts: n,
                    detail: format!("server returned {status}"),
                },
                None,
            ));
        }
        if !status.is_success() {
            let body = resp.text().await.unwrap_or_default();
            return Err(Failure::Fatal(GatewayError::Rejected {
                status: status.as_u16(),
                body,
            }));
        }
        let parsed: WireResponse = resp.json().await.map_err(|e| {
            if e.is_timeout() {
                Failure::Retry(GatewayError::Timeout { attempts: n }, None)
            } else {
                Failure::Fatal(GatewayError::BadResponse(e.to_string()))
            }
        })?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| Failure::Fatal(GatewayError::BadResponse("no message content in first choice".into())))
    }
}

#[async_trait]
impl ChatBackend for HttpBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Http
    }

    async fn complete(&self, req: &CompletionRequest) -> Result<CompletionResult, GatewayError> {
        req.params
            .check()
            .map_err(|e| GatewayError::InvalidParams(e.to_string()))?;
        let started = Instant::now();
        let max = self.retry.max_attempts.max(1);
        let mut n = 1;
        loop {
            match self.attempt(req, n).await {
                Ok(raw_text) => {
                    return Ok(CompletionResult {
                        raw_text,
                        latency: started.elapsed(),
                        backend: BackendKind::Http,
                        attempt: n,
                    })
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(e, _)) if n >= max => return Err(e),
                Err(Failure::Retry(e, hint)) => {
                    let wait = hint
                        .unwrap_or_default()
                        .max(self.retry.delay_after(n))
                        .min(self.retry.max_delay);
                    tracing::warn!(attempt = n, error = %e, ?wait, "retrying completion");
                    tokio::time::sleep(wait).await;
                    n += 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_is_exponential_and_bounded() {
        let p = RetryPolicy {
            max_attempts: 10,
            base_delay: Duration::from_millis(100),
            max_delay: Duration::from_millis(1000),
        };
        let d: Vec<u128> = (1..=6).map(|n| p.delay_after(n).as_millis()).collect();
        assert_eq!(d, vec![100, 200, 400, 800, 1000, 1000]);
        assert_eq!(p.delay_after(200), Duration::from_millis(1000));
    }

    #[test]
    fn missing_key_is_auth_error() {
        assert!(matches!(
            HttpBackend::from_env_values(None, None),
            Err(GatewayError::Auth(_))
        ));
        assert!(matches!(
            HttpBackend::from_env_values(Some("  ".into()), None),
            Err(GatewayError::Auth(_))
        ));
    }

    #[test]
    fn endpoint_joins_base() {
        let b = HttpBackend::new("http://localhost:9/v1/", "k").unwrap();
        assert_eq!(b.endpoint(), "http://localhost:9/v1/chat/completions");
    }

    #[test]
    fn wire_request_shape() {
        let p = quizforge_core::GenerationParams::default();
        let body = WireRequest {
            model: &p.model,
            messages: [
                WireMessage {
                    role: "system",
                    content: "s",
                },
                WireMessage {
                    role: "user",
                    content: "u",
                },
            ],
            temperature: p.temperature,
            top_p: p.top_p,
            frequency_penalty: p.frequency_penalty,
            presence_penalty: p.presence_penalty,
            max_tokens: p.max_tokens,
        };
        let v = serde_json::to_value(&body).unwrap();
        assert_eq!(v["model"], "gpt-4-0613");
        assert_eq!(v["messages"][0]["role"], "system");
        assert_eq!(v["messages"][1]["content"], "u");
        assert_eq!(v["max_tokens"], 2000);
        assert_eq!(v["top_p"], 1.0);
    }
}
