//! End-to-end generation: classify each learning objective, plan question
//! types, build prompts, call the chat backend, parse, lint and persist.
//!
//! Output under a deterministic backend and a fixed clock depends only on
//! the courses, resources and mapping. Completions may finish in any order;
//! results are sorted by `(loId, questionType)` before anything is written.

use std::sync::Arc;

use chrono::{DateTime, Utc};
use futures::stream::{self, StreamExt};
use quizforge_core::bloom::classify_lo;
use quizforge_core::{
    build_prompts, parse_mcq, Course, DesignResources, GenerationParams, LearningObjective,
    ParseContext, PlanError, PromptError, PromptPair, QuestionType, Store, StoreError, StoredMcq,
    TypeMapping, VerbLexicon,
};
use quizforge_llm::{ChatBackend, CompletionRequest, RequestMeta};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_CONCURRENCY: usize = 4;
/// Attempts per (LO, type) when the model output does not parse.
pub const PARSE_ATTEMPTS: u32 = 2;

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("concurrency limit must be at least 1")]
    ZeroConcurrency,
    #[error("course {course:?} has no module {module:?} containing LO {lo_id:?}")]
    LoNotInModule {
        course: String,
        module: String,
        lo_id: String,
    },
    #[error("no learning objective with id {0:?}")]
    UnknownLo(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    Gateway,
    Parse,
}

/// One failed attempt at producing an MCQ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenerationFailure {
    pub lo_id: String,
    pub question_type: QuestionType,
    pub attempt: u32,
    pub kind: FailureKind,
    pub detail: String,
}

/// Run manifest, written to `runs/<runId>.json`.
///
/// `failed` counts failed attempts, so `produced + failed == attempts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenerationRun {
    pub run_id: String,
    pub course_ref: String,
    pub planned: usize,
    pub produced: usize,
    pub failed: usize,
    pub attempts: usize,
    pub params: GenerationParams,
    pub concurrency: usize,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub failures: Vec<GenerationFailure>,
}

/// MCQs produced for one LO plus the attempts that failed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoOutcome {
    pub mcqs: Vec<StoredMcq>,
    pub failures: Vec<GenerationFailure>,
    pub attempts: usize,
}

#[derive(Debug, Clone, Default)]
pub struct BatchOptions {
    pub concurrency: usize,
    /// Restrict the run to one LO.
    pub lo_id: Option<String>,
}

struct Job {
    course_title: String,
    lo_id: String,
    bloom: quizforge_core::BloomLevel,
    qtype: QuestionType,
    prompts: PromptPair,
}

struct JobOutcome {
    lo_id: String,
    qtype: QuestionType,
    mcq: Option<StoredMcq>,
    failures: Vec<GenerationFailure>,
    attempts: usize,
}

pub struct Pipeline {
    backend: Arc<dyn ChatBackend>,
    resources: DesignResources,
    mapping: TypeMapping,
    lexicon: Option<VerbLexicon>,
    params: GenerationParams,
    clock: Arc<dyn Clock>,
    run_id: String,
}

impl Pipeline {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        Self {
            backend,
            resources: DesignResources::bundled(),
            mapping: TypeMapping::default(),
            lexicon: Some(VerbLexicon::default_lexicon()),
            params: GenerationParams::default(),
            clock: Arc::new(SystemClock),
            run_id: uuid::Uuid::new_v4().to_string(),
        }
    }

    pub fn with_resources(mut self, resources: DesignResources) -> Self {
        self.resources = resources;
        self
    }

    pub fn with_mapping(mut self, mapping: TypeMapping) -> Self {
        self.mapping = mapping;
        self
    }

    /// `None` disables classification; unclassified LOs then fail planning.
    pub fn with_lexicon(mut self, lexicon: Option<VerbLexicon>) -> Self {
        self.lexicon = lexicon;
        self
    }

    pub fn with_params(mut self, params: GenerationParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_run_id(mut self, run_id: impl Into<String>) -> Self {
        self.run_id = run_id.into();
        self
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    /// The LO with its level filled in by the classifier when missing.
    fn classified(&self, lo: &LearningObjective) -> Result<LearningObjective, PlanError> {
        let mut lo = lo.clone();
        if lo.bloom.is_none() {
            match &self.lexicon {
                Some(lex) => lo.bloom = Some(classify_lo(&lo.text, lex)),
                None => return Err(PlanError::UnclassifiedLo(vec![lo.id])),
            }
        }
        Ok(lo)
    }

    fn jobs_for(&self, course: &Course, module: &str, lo: &LearningObjective) -> Result<Vec<Job>, PipelineError> {
        let lo = self.classified(lo)?;
        let bloom = lo.bloom.expect("classified");
        self.mapping
            .map_types(bloom)
            .iter()
            .map(|&qtype| {
                Ok(Job {
                    course_title: course.title.clone(),
                    lo_id: lo.id.clone(),
                    bloom,
                    qtype,
                    prompts: build_prompts(course, module, &lo, qtype, &self.resources)?,
                })
            })
            .collect()
    }

    async fn run_job(&self, job: Job) -> JobOutcome {
        let req = CompletionRequest {
            system: job.prompts.system,
            user: job.prompts.user,
            params: self.params.clone(),
            meta: Some(RequestMeta {
                lo_id: job.lo_id.clone(),
                question_type: job.qtype,
            }),
        };
        let ctx = ParseContext {
            mcq_id: format!("{}:{}:{}", self.run_id, job.lo_id, job.qtype.slug()),
            lo_id: job.lo_id.clone(),
            question_type: job.qtype,
            bloom: job.bloom,
            model: self.params.model.clone(),
            created_at: self.clock.now(),
        };
        let mut out = JobOutcome {
            lo_id: job.lo_id,
            qtype: job.qtype,
            mcq: None,
            failures: Vec::new(),
            attempts: 0,
        };
        for attempt in 1..=PARSE_ATTEMPTS {
            out.attempts += 1;
            let fail = |kind, detail: String| GenerationFailure {
                lo_id: out.lo_id.clone(),
                question_type: out.qtype,
                attempt,
                kind,
                detail,
            };
            let result = match self.backend.complete(&req).await {
                Ok(r) => r,
                Err(e) => {
                    // the gateway has already retried transient errors
                    tracing::warn!(lo = %out.lo_id, qtype = %out.qtype.slug(), course = %job.course_title, error = %e, "completion failed");
                    out.failures.push(fail(FailureKind::Gateway, e.to_string()));
                    break;
                }
            };
            match parse_mcq(&result.raw_text, &ctx) {
                Ok(mcq) => {
                    out.mcq = Some(StoredMcq::new(mcq));
                    break;
                }
                Err(e) => {
                    tracing::warn!(lo = %out.lo_id, qtype = %out.qtype.slug(), attempt, error = %e, "unparseable model output");
                    out.failures.push(fail(FailureKind::Parse, e.to_string()));
                }
            }
        }
        out
    }

    async fn run_jobs(&self, jobs: Vec<Job>, concurrency: usize) -> Result<Vec<JobOutcome>, PipelineError> {
        if concurrency == 0 {
            return Err(PipelineError::ZeroConcurrency);
        }
        let mut outcomes: Vec<JobOutcome> = stream::iter(jobs)
            .map(|job| self.run_job(job))
            .buffer_unordered(concurrency)
            .collect()
            .await;
        outcomes.sort_by(|a, b| (&a.lo_id, a.qtype).cmp(&(&b.lo_id, b.qtype)));
        Ok(outcomes)
    }

    /// Generate every mapped question type for one LO. Nothing is persisted.
    pub async fn generate_for_lo(
        &self,
        course: &Course,
        module_name: &str,
        lo: &LearningObjective,
    ) -> Result<LoOutcome, PipelineError> {
        let in_module = course
            .modules
            .iter()
            .any(|m| m.name == module_name && m.los.iter().any(|l| l.id == lo.id));
        if !in_module {
            return Err(PipelineError::LoNotInModule {
                course: course.title.clone(),
                module: module_name.to_string(),
                lo_id: lo.id.clone(),
            });
        }
        let jobs = self.jobs_for(course, module_name, lo)?;
        let outcomes = self.run_jobs(jobs, DEFAULT_CONCURRENCY).await?;
        let mut out = LoOutcome::default();
        for o in outcomes {
            out.attempts += o.attempts;
            out.failures.extend(o.failures);
            out.mcqs.extend(o.mcq);
        }
        Ok(out)
    }

    /// Generate for every LO of `courses`, persist the MCQs and write the
    /// run manifest.
    pub async fn generate_batch(
        &self,
        courses: &[Course],
        store: &Store,
        opts: &BatchOptions,
    ) -> Result<GenerationRun, PipelineError> {
        let started_at = self.clock.now();
        let mut jobs = Vec::new();
        let mut unclassified = Vec::new();
        for course in courses {
            for (module, lo) in course.los() {
                if opts.lo_id.as_deref().is_some_and(|id| id != lo.id) {
                    continue;
                }
                match self.jobs_for(course, module, lo) {
                    Ok(j) => jobs.extend(j),
                    Err(PipelineError::Plan(PlanError::UnclassifiedLo(ids))) => unclassified.extend(ids),
                    Err(e) => return Err(e),
                }
            }
        }
        if !unclassified.is_empty() {
            return Err(PlanError::UnclassifiedLo(unclassified).into());
        }
        if let Some(id) = &opts.lo_id {
            if jobs.is_empty() && !courses.iter().any(|c| c.find_lo(id).is_some()) {
                return Err(PipelineError::UnknownLo(id.clone()));
            }
        }
        let planned = jobs.len();
        let outcomes = self.run_jobs(jobs, opts.concurrency).await?;

        let mut mcqs = Vec::new();
        let mut failures = Vec::new();
        let mut attempts = 0;
        for o in outcomes {
            attempts += o.attempts;
            failures.extend(o.failures);
            mcqs.extend(o.mcq.map(|m| m.mcq));
        }
        store.append_mcqs(&mcqs)?;

        let run = GenerationRun {
            run_id: self.run_id.clone(),
            course_ref: courses
                .iter()
                .map(|c| c.title.as_str())
                .collect::<Vec<_>>()
                .join("; "),
            planned,
            produced: mcqs.len(),
            failed: failures.len(),
            attempts,
            params: self.params.clone(),
            concurrency: opts.concurrency,
            started_at,
            finished_at: self.clock.now(),
            failures,
        };
        store.write_run(&self.run_id, &run)?;
        Ok(run)
    }
}
