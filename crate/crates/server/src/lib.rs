//! JSON API backing the review UI.
//!
//! Raters must answer an MCQ before they may judge it: the answer endpoint
//! records the attempt and reveals the key, and the rubric endpoint refuses
//! (412) until that attempt exists. No payload served before an answer
//! carries the key or the explanation.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use quizforge_core::eval::compare::DEFAULT_ITERATIONS;
use quizforge_core::eval::{
    agreement_report, compare_pools, resolve, resolve_all, rubric_schema, AgreementError,
    CompareError, RaterRole, RubricAnnotation, RubricItem, RubricSchemaItem,
};
use quizforge_core::model::{BloomLevel, Choice, McqSource, OptionLabel, QuestionType};
use quizforge_core::store::{AnswerRecord, LintStatus, McqFilter, StoreError, StoredMcq};
use quizforge_core::{LintFinding, Store};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub seed: u64,
    pub iterations: u64,
}

impl AppState {
    pub fn new(store: Store) -> Self {
        Self {
            store: Arc::new(store),
            seed: 0,
            iterations: DEFAULT_ITERATIONS,
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::DuplicateId { .. } => Self::new(StatusCode::CONFLICT, e.to_string()),
            _ => {
                tracing::error!(error = %e, "store failure");
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// An MCQ as shown before answering: no key, no explanation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PublicMcq {
    pub id: String,
    pub lo_id: String,
    pub question_type: QuestionType,
    pub bloom: BloomLevel,
    pub stem: String,
    pub choices: Vec<Choice>,
    pub code_in_stem: bool,
}

impl From<&StoredMcq> for PublicMcq {
    fn from(s: &StoredMcq) -> Self {
        let m = &s.mcq;
        Self {
            id: m.id.clone(),
            lo_id: m.lo_id.clone(),
            question_type: m.question_type,
            bloom: m.bloom,
            stem: m.stem.clone(),
            choices: m.choices.clone(),
            code_in_stem: m.code_in_stem,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Progress {
    pub annotated_by_rater: usize,
    pub remaining_for_rater: usize,
    pub total_mcqs: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnnotationTask {
    pub mcq_id: String,
    pub mcq: PublicMcq,
    /// The rater already answered and may go straight to the rubric.
    pub answered: bool,
    pub rubric: Vec<RubricSchemaItem>,
    pub progress: Progress,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskQuery {
    pub rater_id: String,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnswerBody {
    pub rater_id: String,
    pub option: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnswerReveal {
    pub correct: bool,
    pub key: OptionLabel,
    pub explanation: String,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RubricBody {
    pub rater_id: String,
    pub rater_role: String,
    #[serde(default)]
    pub judgments: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonQuery {
    pub seed: Option<u64>,
    pub iterations: Option<u64>,
    pub pool_a: Option<String>,
    pub pool_b: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct McqQuery {
    pub source: Option<String>,
    pub lo_id: Option<String>,
    pub status: Option<String>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct McqSummary {
    #[serde(flatten)]
    pub mcq: PublicMcq,
    pub source: McqSource,
    pub lints: Vec<LintFinding>,
    pub status: LintStatus,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnnotationQuery {
    pub mcq_id: Option<String>,
}

pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/rubric", get(get_rubric))
        .route("/api/tasks", get(next_task))
        .route("/api/tasks/{mcq_id}/answer", post(post_answer))
        .route("/api/tasks/{mcq_id}/rubric", post(post_rubric))
        .route("/api/mcqs", get(list_mcqs))
        .route("/api/mcqs/{mcq_id}/verdict", get(get_verdict))
        .route("/api/annotations", get(list_annotations))
        .route("/api/stats/agreement", get(get_agreement))
        .route("/api/stats/comparison", get(get_comparison))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(addr: SocketAddr, state: AppState, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state, static_dir)).await
}

async fn get_rubric() -> Json<Vec<RubricSchemaItem>> {
    Json(rubric_schema())
}

async fn next_task(State(s): State<AppState>, Query(q): Query<TaskQuery>) -> ApiResult<Response> {
    if q.rater_id.trim().is_empty() {
        return Err(ApiError::unprocessable("raterId is required"));
    }
    let mcqs = s.store.load_mcqs(&McqFilter::default())?;
    let annotations = s.store.load_annotations(None)?;
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut rated_by_rater = std::collections::HashSet::new();
    for a in &annotations {
        *counts.entry(a.mcq_id.as_str()).or_default() += 1;
        if a.rater_id == q.rater_id {
            rated_by_rater.insert(a.mcq_id.as_str());
        }
    }
    let next = mcqs
        .iter()
        .filter(|m| !rated_by_rater.contains(m.mcq.id.as_str()))
        .min_by(|a, b| {
            let ca = counts.get(a.mcq.id.as_str()).copied().unwrap_or(0);
            let cb = counts.get(b.mcq.id.as_str()).copied().unwrap_or(0);
            (ca, &a.mcq.id).cmp(&(cb, &b.mcq.id))
        });
    let Some(next) = next else {
        return Ok(StatusCode::NO_CONTENT.into_response());
    };
    let answered = s.store.find_answer(&next.mcq.id, &q.rater_id)?.is_some();
    let task = AnnotationTask {
        mcq_id: next.mcq.id.clone(),
        mcq: PublicMcq::from(next),
        answered,
        rubric: rubric_schema(),
        progress: Progress {
            annotated_by_rater: rated_by_rater.len(),
            remaining_for_rater: mcqs.len() - rated_by_rater.len(),
            total_mcqs: mcqs.len(),
        },
    };
    Ok(Json(task).into_response())
}

fn find_mcq(s: &AppState, id: &str) -> ApiResult<StoredMcq> {
    s.store
        .find_mcq(id)?
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no MCQ with id {id:?}")))
}

async fn post_answer(
    State(s): State<AppState>,
    Path(mcq_id): Path<String>,
    Json(body): Json<AnswerBody>,
) -> ApiResult<Json<AnswerReveal>> {
    let mcq = find_mcq(&s, &mcq_id)?.mcq;
    if body.rater_id.trim().is_empty() {
        return Err(ApiError::unprocessable("raterId is required"));
    }
    let option: OptionLabel = body
        .option
        .parse()
        .map_err(|_| ApiError::unprocessable(format!("option {:?} is not A, B or C", body.option)))?;
    let correct = option == mcq.correct_answer;
    s.store.append_answer(&AnswerRecord {
        mcq_id: mcq.id.clone(),
        rater_id: body.rater_id,
        option,
        correct,
        answered_at: chrono::Utc::now(),
    })?;
    Ok(Json(AnswerReveal {
        correct,
        key: mcq.correct_answer,
        explanation: mcq.explanation,
    }))
}

async fn post_rubric(
    State(s): State<AppState>,
    Path(mcq_id): Path<String>,
    Json(body): Json<RubricBody>,
) -> ApiResult<(StatusCode, Json<RubricAnnotation>)> {
    find_mcq(&s, &mcq_id)?;
    let answer = s
        .store
        .find_answer(&mcq_id, &body.rater_id)?
        .ok_or_else(|| ApiError::new(StatusCode::PRECONDITION_FAILED, "answer the MCQ before judging it"))?;
    let rater_role: RaterRole = body
        .rater_role
        .parse()
        .map_err(|_| ApiError::unprocessable(format!("unknown raterRole {:?}", body.rater_role)))?;
    let mut judgments = BTreeMap::new();
    for (k, v) in body.judgments {
        let item: RubricItem = k
            .parse()
            .map_err(|_| ApiError::unprocessable(format!("unknown rubric item {k:?}")))?;
        judgments.insert(item, v);
    }
    let annotation = RubricAnnotation {
        mcq_id,
        rater_id: body.rater_id,
        rater_role,
        answered_option: answer.option,
        answered_correctly: answer.correct,
        judgments,
    };
    annotation
        .check()
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    s.store.append_annotation(&annotation)?;
    Ok((StatusCode::CREATED, Json(annotation)))
}

async fn list_mcqs(State(s): State<AppState>, Query(q): Query<McqQuery>) -> ApiResult<Json<Vec<McqSummary>>> {
    let filter = McqFilter {
        source: q
            .source
            .map(|v| v.parse().map_err(|_| ApiError::unprocessable(format!("unknown source {v:?}"))))
            .transpose()?,
        lo_id: q.lo_id,
        status: q
            .status
            .map(|v| v.parse().map_err(|_| ApiError::unprocessable(format!("unknown status {v:?}"))))
            .transpose()?,
    };
    let out = s
        .store
        .load_mcqs(&filter)?
        .iter()
        .map(|m| McqSummary {
            mcq: PublicMcq::from(m),
            source: m.mcq.source,
            lints: m.lints.clone(),
            status: m.status(),
        })
        .collect();
    Ok(Json(out))
}

async fn list_annotations(
    State(s): State<AppState>,
    Query(q): Query<AnnotationQuery>,
) -> ApiResult<Json<Vec<RubricAnnotation>>> {
    Ok(Json(s.store.load_annotations(q.mcq_id.as_deref())?))
}

async fn get_verdict(State(s): State<AppState>, Path(mcq_id): Path<String>) -> ApiResult<Response> {
    find_mcq(&s, &mcq_id)?;
    let anns = s.store.load_annotations(Some(&mcq_id))?;
    if anns.is_empty() {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            format!("MCQ {mcq_id:?} has no annotations yet"),
        ));
    }
    let v = resolve(&anns).map_err(|e| ApiError::unprocessable(e.to_string()))?;
    Ok(Json(v).into_response())
}

async fn get_agreement(State(s): State<AppState>) -> ApiResult<Response> {
    let anns = s.store.load_annotations(None)?;
    // NoEligibleItems and ragged inputs both mean "not enough data yet"
    agreement_report(&anns)
        .map(|r| Json(r).into_response())
        .map_err(|e: AgreementError| ApiError::unprocessable(e.to_string()))
}

async fn get_comparison(
    State(s): State<AppState>,
    Query(q): Query<ComparisonQuery>,
) -> ApiResult<Response> {
    let parse_pool = |v: Option<String>, default: McqSource| -> ApiResult<McqSource> {
        match v {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ApiError::unprocessable(format!("unknown pool {v:?}"))),
        }
    };
    let pool_a = parse_pool(q.pool_a, McqSource::Generated)?;
    let pool_b = parse_pool(q.pool_b, McqSource::Human)?;
    let sources: HashMap<String, McqSource> = s
        .store
        .load_mcqs(&McqFilter::default())?
        .into_iter()
        .map(|m| (m.mcq.id, m.mcq.source))
        .collect();
    let verdicts = resolve_all(&s.store.load_annotations(None)?)
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let pick = |src: McqSource| -> Vec<_> {
        verdicts
            .values()
            .filter(|v| sources.get(&v.mcq_id) == Some(&src))
            .cloned()
            .collect()
    };
    let report = compare_pools(
        &pick(pool_a),
        &pick(pool_b),
        q.iterations.unwrap_or(s.iterations),
        q.seed.unwrap_or(s.seed),
    )
    .map_err(|e: CompareError| ApiError::unprocessable(e.to_string()))?;
    Ok(Json(report).into_response())
}
