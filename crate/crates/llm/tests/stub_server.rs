//! HttpBackend against a scripted local server.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use quizforge_core::GenerationParams;
use quizforge_llm::{ChatBackend, CompletionRequest, GatewayError, HttpBackend, RetryPolicy};
use serde_json::{json, Value};

#[derive(Clone)]
struct Script {
    statuses: Arc<Vec<u16>>,
    calls: Arc<AtomicUsize>,
    bodies: Arc<Mutex<Vec<Value>>>,
    auth: Arc<Mutex<Vec<String>>>,
}

async fn handler(
    State(s): State<Script>,
    headers: axum::http::HeaderMap,
    Json(body): Json<Value>,
) -> (StatusCode, Json<Value>) {
    let i = s.calls.fetch_add(1, Ordering::SeqCst);
    s.bodies.lock().unwrap().push(body);
    s.auth.lock().unwrap().push(
        headers
            .get("authorization")
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default()
            .to_string(),
    );
    let status = s.statuses.get(i).copied().unwrap_or(200);
    let body = if status == 200 {
        json!({"choices": [{"message": {"role": "assistant", "content": "{\"question\": \"ok\"}"}}]})
    } else {
        json!({"error": "scripted"})
    };
    (StatusCode::from_u16(status).unwrap(), Json(body))
}

async fn serve(statuses: Vec<u16>) -> (String, Script) {
    let script = Script {
        statuses: Arc::new(statuses),
        calls: Arc::new(AtomicUsize::new(0)),
        bodies: Arc::default(),
        auth: Arc::default(),
    };
    let app = Router::new()
        .route("/v1/chat/completions", post(handler))
        .with_state(script.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}/v1"), script)
}

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        max_attempts: 3,
        base_delay: Duration::from_millis(5),
        max_delay: Duration::from_millis(20),
    }
}

fn request() -> CompletionRequest {
    CompletionRequest {
        system: "sys".into(),
        user: "usr".into(),
        params: GenerationParams::default(),
        meta: None,
    }
}

#[tokio::test]
async fn rate_limited_once_then_ok() {
    let (base, script) = serve(vec![429, 200]).await;
    let backend = HttpBackend::new(&base, "secret").unwrap().with_retry(fast_retry());
    let r = backend.complete(&request()).await.unwrap();
    assert_eq!(r.attempt, 2);
    assert_eq!(r.raw_text, "{\"question\": \"ok\"}");
    assert_eq!(script.calls.load(Ordering::SeqCst), 2);

    let body = &script.bodies.lock().unwrap()[1];
    assert_eq!(body["model"], "gpt-4-0613");
    assert_eq!(body["messages"][0], json!({"role": "system", "content": "sys"}));
    assert_eq!(body["messages"][1], json!({"role": "user", "content": "usr"}));
    assert_eq!(body["temperature"], 1.0);
    assert_eq!(body["frequency_penalty"], 0.0);
    assert_eq!(body["presence_penalty"], 0.0);
    assert_eq!(body["max_tokens"], 2000);
    assert!(body.get("meta").is_none());
    assert_eq!(script.auth.lock().unwrap()[0], "Bearer secret");
}

#[tokio::test]
async fn gives_up_after_max_attempts() {
    let (base, script) = serve(vec![503, 503, 503, 200]).await;
    let backend = HttpBackend::new(&base, "k").unwrap().with_retry(fast_retry());
    let err = backend.complete(&request()).await.unwrap_err();
    assert!(matches!(err, GatewayError::Transport { attempts: 3, .. }), "{err:?}");
    assert_eq!(script.calls.load(Ordering::SeqCst), 3);

    let (base, _) = serve(vec![429, 429, 429]).await;
    let backend = HttpBackend::new(&base, "k").unwrap().with_retry(fast_retry());
    assert_eq!(
        backend.complete(&request()).await.unwrap_err(),
        GatewayError::RateLimited { attempts: 3 }
    );
}

#[tokio::test]
async fn auth_failure_is_not_retried() {
    let (base, script) = serve(vec![401, 200]).await;
    let backend = HttpBackend::new(&base, "bad").unwrap().with_retry(fast_retry());
    assert!(matches!(
        backend.complete(&request()).await,
        Err(GatewayError::Auth(_))
    ));
    assert_eq!(script.calls.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn client_error_is_rejected() {
    let (base, _) = serve(vec![400]).await;
    let backend = HttpBackend::new(&base, "k").unwrap().with_retry(fast_retry());
    assert!(matches!(
        backend.complete(&request()).await,
        Err(GatewayError::Rejected { status: 400, .. })
    ));
}

#[tokio::test]
async fn connection_refused_is_transport_error() {
    // bind then drop to get a port nobody listens on
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let backend = HttpBackend::new(&format!("http://127.0.0.1:{port}/v1"), "k")
        .unwrap()
        .with_retry(fast_retry());
    assert!(matches!(
        backend.complete(&request()).await,
        Err(GatewayError::Transport { attempts: 3, .. })
    ));
}

#[tokio::test]
async fn invalid_params_rejected_before_sending() {
    let backend = HttpBackend::new("http://127.0.0.1:9/v1", "k").unwrap();
    let mut req = request();
    req.params.temperature = -1.0;
    assert!(matches!(
        backend.complete(&req).await,
        Err(GatewayError::InvalidParams(_))
    ));
}
