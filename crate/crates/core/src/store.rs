//! File-backed store: one directory holding course files, JSONL record
//! files, run manifests and reports.
//!
//! ```text
//! <root>/courses/*.json
//! <root>/mcqs.jsonl          StoredMcq
//! <root>/annotations.jsonl   RubricAnnotation
//! <root>/answers.jsonl       AnswerRecord
//! <root>/runs/<id>.json
//! <root>/reports/<name>.json
//! ```
//!
//! JSONL files are only ever appended to. Writes from one process go through
//! a single lock; no cross-process locking is attempted.

use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::rubric::{RubricAnnotation, RubricError};
use crate::lint::{lint_mcq, LintFinding, Severity};
use crate::model::{validate_mcq, Course, CourseError, Mcq, McqError, McqSource, OptionLabel, RawMcq};

pub const MCQS_FILE: &str = "mcqs.jsonl";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const ANSWERS_FILE: &str = "answers.jsonl";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}:{line}: invalid MCQ: {source}", path.display())]
    InvalidMcq {
        path: PathBuf,
        line: usize,
        source: McqError,
    },
    #[error("{}:{line}: invalid annotation: {source}", path.display())]
    InvalidAnnotation {
        path: PathBuf,
        line: usize,
        source: RubricError,
    },
    #[error("{}: {source}", path.display())]
    Course { path: PathBuf, source: CourseError },
    #[error("{file} already has a record with id {id}")]
    DuplicateId { file: &'static str, id: String },
    #[error("invalid name {0:?}")]
    BadName(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// An MCQ as persisted: the record fields plus its lint findings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredMcq {
    #[serde(flatten)]
    pub mcq: Mcq,
    pub lints: Vec<LintFinding>,
}

impl StoredMcq {
    pub fn new(mcq: Mcq) -> Self {
        let lints = lint_mcq(&mcq);
        Self { mcq, lints }
    }

    pub fn status(&self) -> LintStatus {
        if self.lints.is_empty() {
            LintStatus::Clean
        } else if self.lints.iter().any(|f| f.severity == Severity::Error) {
            LintStatus::Error
        } else {
            LintStatus::Flagged
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LintStatus {
    /// No findings.
    Clean,
    /// Warnings only.
    Flagged,
    /// At least one error-severity finding.
    Error,
}

impl std::str::FromStr for LintStatus {
    type Err = crate::model::ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clean" => Ok(LintStatus::Clean),
            "flagged" => Ok(LintStatus::Flagged),
            "error" => Ok(LintStatus::Error),
            _ => Err(crate::model::ParseEnumError::new("lint status", s)),
        }
    }
}

/// One rater's answer attempt, recorded before any rubric judgment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnswerRecord {
    pub mcq_id: String,
    pub rater_id: String,
    pub option: OptionLabel,
    pub correct: bool,
    pub answered_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct McqFilter {
    pub source: Option<McqSource>,
    pub lo_id: Option<String>,
    pub status: Option<LintStatus>,
}

impl McqFilter {
    pub fn matches(&self, m: &StoredMcq) -> bool {
        self.source.is_none_or(|s| m.mcq.source == s)
            && self.lo_id.as_deref().is_none_or(|id| m.mcq.lo_id == id)
            && self.status.is_none_or(|s| m.status() == s)
    }
}

pub struct Store {
    root: PathBuf,
    write_lock: Mutex<()>,
}

impl Store {
    /// Open a store, creating its directory layout if needed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let root = root.into();
        for dir in [root.clone(), root.join("courses"), root.join("runs"), root.join("reports")] {
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        Ok(Store {
            root,
            write_lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }

    /// Validate a course file and copy it into `courses/`.
    pub fn import_course(&self, path: &Path) -> Result<Course, StoreError> {
        let course = read_course(path)?;
        let name = path
            .file_name()
            .ok_or_else(|| StoreError::BadName(path.display().to_string()))?;
        let dest = self.root.join("courses").join(name);
        let _guard = self.lock();
        fs::copy(path, &dest).map_err(io_err(&dest))?;
        Ok(course)
    }

    /// All imported courses, ordered by file name.
    pub fn load_courses(&self) -> Result<Vec<Course>, StoreError> {
        read_course_dir(&self.root.join("courses"))
    }

    /// Append MCQs, linting each. Ids must be new to the store and unique
    /// within the batch; nothing is written if any is not.
    pub fn append_mcqs(&self, mcqs: &[Mcq]) -> Result<Vec<StoredMcq>, StoreError> {
        let _guard = self.lock();
        let mut ids: HashSet<String> = self
            .load_mcqs(&McqFilter::default())?
            .into_iter()
            .map(|m| m.mcq.id)
            .collect();
        for m in mcqs {
            if !ids.insert(m.id.clone()) {
                return Err(StoreError::DuplicateId {
                    file: MCQS_FILE,
                    id: m.id.clone(),
                });
            }
        }
        let stored: Vec<StoredMcq> = mcqs.iter().cloned().map(StoredMcq::new).collect();
        append_lines(&self.path(MCQS_FILE), &stored)?;
        Ok(stored)
    }

    pub fn load_mcqs(&self, filter: &McqFilter) -> Result<Vec<StoredMcq>, StoreError> {
        let path = self.path(MCQS_FILE);
        let mut out = Vec::new();
        for (line, m) in read_lines::<StoredMcq>(&path)? {
            m.mcq.check().map_err(|source| StoreError::InvalidMcq {
                path: path.clone(),
                line,
                source,
            })?;
            if filter.matches(&m) {
                out.push(m);
            }
        }
        Ok(out)
    }

    pub fn find_mcq(&self, id: &str) -> Result<Option<StoredMcq>, StoreError> {
        Ok(self
            .load_mcqs(&McqFilter::default())?
            .into_iter()
            .find(|m| m.mcq.id == id))
    }

    /// Append one annotation. A rater annotates each MCQ at most once.
    pub fn append_annotation(&self, a: &RubricAnnotation) -> Result<(), StoreError> {
        let _guard = self.lock();
        let path = self.path(ANNOTATIONS_FILE);
        a.check().map_err(|source| StoreError::InvalidAnnotation {
            path: path.clone(),
            line: 0,
            source,
        })?;
        if self
            .load_annotations(Some(&a.mcq_id))?
            .iter()
            .any(|x| x.rater_id == a.rater_id)
        {
            return Err(StoreError::DuplicateId {
                file: ANNOTATIONS_FILE,
                id: format!("{}/{}", a.mcq_id, a.rater_id),
            });
        }
        append_lines(&path, std::slice::from_ref(a))
    }

    pub fn load_annotations(&self, mcq_id: Option<&str>) -> Result<Vec<RubricAnnotation>, StoreError> {
        let path = self.path(ANNOTATIONS_FILE);
        let mut out = Vec::new();
        for (line, a) in read_lines::<RubricAnnotation>(&path)? {
            a.check().map_err(|source| StoreError::InvalidAnnotation {
                path: path.clone(),
                line,
                source,
            })?;
            if mcq_id.is_none_or(|id| a.mcq_id == id) {
                out.push(a);
            }
        }
        Ok(out)
    }

    /// Append one answer attempt. A rater answers each MCQ at most once.
    pub fn append_answer(&self, a: &AnswerRecord) -> Result<(), StoreError> {
        let _guard = self.lock();
        if self
            .load_answers()?
            .iter()
            .any(|x| x.mcq_id == a.mcq_id && x.rater_id == a.rater_id)
        {
            return Err(StoreError::DuplicateId {
                file: ANSWERS_FILE,
                id: format!("{}/{}", a.mcq_id, a.rater_id),
            });
        }
        append_lines(&self.path(ANSWERS_FILE), std::slice::from_ref(a))
    }

    pub fn load_answers(&self) -> Result<Vec<AnswerRecord>, StoreError> {
        Ok(read_lines(&self.path(ANSWERS_FILE))?
            .into_iter()
            .map(|(_, a)| a)
            .collect())
    }

    pub fn find_answer(&self, mcq_id: &str, rater_id: &str) -> Result<Option<AnswerRecord>, StoreError> {
        Ok(self
            .load_answers()?
            .into_iter()
            .find(|a| a.mcq_id == mcq_id && a.rater_id == rater_id))
    }

    /// Import human-written MCQs from a JSONL file of loose records. Each
    /// record needs an id and loId; source, model and createdAt are filled in.
    pub fn import_human_mcqs(&self, path: &Path, created_at: DateTime<Utc>) -> Result<Vec<StoredMcq>, StoreError> {
        let mut mcqs = Vec::new();
        for (line, mut raw) in read_lines::<RawMcq>(path)? {
            raw.source = Some(McqSource::Human);
            raw.fill_missing_provenance(created_at);
            let mcq = validate_mcq(&raw).map_err(|source| StoreError::InvalidMcq {
                path: path.to_path_buf(),
                line,
                source,
            })?;
            mcqs.push(mcq);
        }
        self.append_mcqs(&mcqs)
    }

    pub fn write_run<T: Serialize>(&self, run_id: &str, run: &T) -> Result<PathBuf, StoreError> {
        self.write_json("runs", run_id, run)
    }

    pub fn read_run<T: DeserializeOwned>(&self, run_id: &str) -> Result<T, StoreError> {
        check_name(run_id)?;
        read_json(&self.root.join("runs").join(format!("{run_id}.json")))
    }

    pub fn write_report<T: Serialize>(&self, name: &str, report: &T) -> Result<PathBuf, StoreError> {
        self.write_json("reports", name, report)
    }

    fn write_json<T: Serialize>(&self, dir: &str, name: &str, value: &T) -> Result<PathBuf, StoreError> {
        check_name(name)?;
        let path = self.root.join(dir).join(format!("{name}.json"));
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        let _guard = self.lock();
        fs::write(&path, text).map_err(io_err(&path))?;
        Ok(path)
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, ()> {
        self.write_lock.lock().unwrap_or_else(|e| e.into_inner())
    }
}

fn check_name(name: &str) -> Result<(), StoreError> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | ':'))
        && !name.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(StoreError::BadName(name.to_string()))
    }
}

pub fn read_course(path: &Path) -> Result<Course, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Course::from_json(&text).map_err(|source| StoreError::Course {
        path: path.to_path_buf(),
        source,
    })
}

/// Every `*.json` course file in `dir`, ordered by file name.
pub fn read_course_dir(dir: &Path) -> Result<Vec<Course>, StoreError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_course(p)).collect()
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| StoreError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Parse every line of a JSONL file, with 1-based line numbers. A missing
/// file reads as empty.
pub fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, StoreError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|v| (i + 1, v))
                .map_err(|e| StoreError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut buf = String::new();
    for r in records {
        buf.push_str(&serde_json::to_string(r).expect("serializable"));
        buf.push('\n');
    }
    buf
}

fn append_lines<T: Serialize>(path: &Path, records: &[T]) -> Result<(), StoreError> {
    if records.is_empty() {
        return Ok(());
    }
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    f.write_all(to_jsonl(records).as_bytes())
        .and_then(|_| f.flush())
        .map_err(io_err(path))
}
