//! Mechanical checks of an MCQ against the authoring rules given to the
//! model. Findings are advisory, except `BadCodeFence`.

use serde::{Deserialize, Serialize};

use crate::model::Mcq;

pub const MAX_STEM_CODE_LINES: usize = 20;
pub const MAX_CHOICE_CODE_LINES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LintCode {
    NoneOfTheAbove,
    StemCodeTooLong,
    ChoiceCodeTooLong,
    BadCodeFence,
    EmptyExplanation,
    CodeFlagMismatch,
}

impl LintCode {
    pub fn severity(self) -> Severity {
        match self {
            LintCode::BadCodeFence => Severity::Error,
            _ => Severity::Warning,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintFinding {
    pub code: LintCode,
    pub severity: Severity,
    pub detail: String,
}

impl LintFinding {
    fn new(code: LintCode, detail: String) -> Self {
        Self {
            code,
            severity: code.severity(),
            detail,
        }
    }
}

/// Fenced blocks found in a piece of text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Fences {
    /// Line count of every closed block, fence markers excluded.
    pub block_lines: Vec<usize>,
    /// A block was opened and never closed.
    pub unbalanced: bool,
}

impl Fences {
    pub fn longest(&self) -> usize {
        self.block_lines.iter().copied().max().unwrap_or(0)
    }
}

/// Scan for ``` fences. A fence marker is a line whose first non-blank
/// characters are three backticks. A marker line that also ends with a
/// second ``` is a one-line block.
pub fn scan_fences(text: &str) -> Fences {
    let mut fences = Fences::default();
    let mut open: Option<usize> = None;
    for line in text.lines() {
        let t = line.trim();
        if !t.starts_with("```") {
            if let Some(n) = open.as_mut() {
                *n += 1;
            }
            continue;
        }
        match open.take() {
            Some(n) => fences.block_lines.push(n),
            None => {
                let rest = &t[3..];
                if rest.len() >= 3 && rest.ends_with("```") {
                    fences.block_lines.push(1);
                } else {
                    open = Some(0);
                }
            }
        }
    }
    fences.unbalanced = open.is_some();
    fences
}

pub fn has_stem_fence(stem: &str) -> bool {
    let f = scan_fences(stem);
    !f.block_lines.is_empty() || f.unbalanced
}

fn is_catch_all(choice: &str) -> bool {
    let norm = choice
        .trim()
        .trim_end_matches('.')
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    norm == "none of the above" || norm == "all of the above"
}

/// All findings for `mcq`, sorted by code. Ties keep detection order.
pub fn lint_mcq(mcq: &Mcq) -> Vec<LintFinding> {
    let mut out = Vec::new();

    for c in &mcq.choices {
        if is_catch_all(&c.text) {
            out.push(LintFinding::new(
                LintCode::NoneOfTheAbove,
                format!("choice {} is {:?}", c.option, c.text.trim()),
            ));
        }
    }

    let stem = scan_fences(&mcq.stem);
    if stem.longest() > MAX_STEM_CODE_LINES {
        out.push(LintFinding::new(
            LintCode::StemCodeTooLong,
            format!(
                "stem code block has {} lines (limit {MAX_STEM_CODE_LINES})",
                stem.longest()
            ),
        ));
    }
    if stem.unbalanced {
        out.push(LintFinding::new(
            LintCode::BadCodeFence,
            "stem has an unclosed ``` fence".into(),
        ));
    }

    for c in &mcq.choices {
        let f = scan_fences(&c.text);
        if f.longest() > MAX_CHOICE_CODE_LINES {
            out.push(LintFinding::new(
                LintCode::ChoiceCodeTooLong,
                format!(
                    "choice {} code block has {} lines (limit {MAX_CHOICE_CODE_LINES})",
                    c.option,
                    f.longest()
                ),
            ));
        }
        if f.unbalanced {
            out.push(LintFinding::new(
                LintCode::BadCodeFence,
                format!("choice {} has an unclosed ``` fence", c.option),
            ));
        }
    }

    if mcq.explanation.trim().is_empty() {
        out.push(LintFinding::new(
            LintCode::EmptyExplanation,
            "explanation is empty".into(),
        ));
    }

    let fenced = !stem.block_lines.is_empty() || stem.unbalanced;
    if mcq.code_in_stem != fenced {
        out.push(LintFinding::new(
            LintCode::CodeFlagMismatch,
            format!(
                "code_in_stem is {} but the stem {} a fenced code block",
                mcq.code_in_stem,
                if fenced { "contains" } else { "has no" }
            ),
        ));
    }

    out.sort_by_key(|f| f.code);
    out
}
