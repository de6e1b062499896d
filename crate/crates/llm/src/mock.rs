use std::time::Instant;

use async_trait::async_trait;
use quizforge_core::QuestionType;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{BackendKind, ChatBackend, CompletionRequest, CompletionResult, GatewayError, RequestMeta};

#[derive(Serialize)]
struct Out<'a> {
    question: String,
    choices: [OutChoice<'a>; 3],
    #[serde(rename = "correctAnswer")]
    correct_answer: &'static str,
    code_in_stem: bool,
    explanation: String,
}

#[derive(Serialize)]
struct OutChoice<'a> {
    option: &'a str,
    text: String,
}

fn tag(lo_id: &str, qtype: QuestionType) -> String {
    let digest = Sha256::new()
        .chain_update(lo_id.as_bytes())
        .chain_update([0u8])
        .chain_update(qtype.slug().as_bytes())
        .finalize();
    digest[..6].iter().map(|b| format!("{b:02x}")).collect()
}

/// Deterministic MCQ JSON for `(lo_id, qtype)`.
///
/// The stem carries a hash of both inputs. Code-based types put a fenced
/// snippet in the stem and set `code_in_stem`. The key is always "A" and the
/// output is lint-clean.
pub fn mock_generate(lo_id: &str, qtype: QuestionType) -> String {
    let h = tag(lo_id, qtype);
    // a small number derived from the hash, for code snippets
    let n = u32::from_str_radix(&h[..4], 16).unwrap_or(0) % 90 + 10;
    let (question, choices, explanation): (String, [String; 3], String) = match qtype {
        QuestionType::Recall => (
            format!("[{h}] Which statement about learning objective {lo_id} is accurate?"),
            [
                format!("Statement {h} is accurate"),
                format!("Statement {h} applies only to Python 2"),
                format!("Statement {h} is a syntax error"),
            ],
            "Only the first statement matches the objective.".into(),
        ),
        QuestionType::FillInTheBlank => (
            format!("[{h}] Fill in the blank for {lo_id}: the keyword ____ defines a function."),
            ["def".into(), "func".into(), "lambda".into()],
            "Functions are defined with def; lambda builds anonymous expressions.".into(),
        ),
        QuestionType::ScenarioBased => (
            format!(
                "[{h}] A developer working on {lo_id} needs to store unique values and test membership quickly. Which structure fits best?"
            ),
            ["A set".into(), "A list".into(), "A tuple".into()],
            "Sets keep unique items and test membership in constant time on average.".into(),
        ),
        QuestionType::CorrectOutput => (
            format!(
                "[{h}] What does the following code print for {lo_id}?\n\n```python\nvalue = {n}\nprint(value * 2)\n```"
            ),
            [(n * 2).to_string(), n.to_string(), (n * 2 + 1).to_string()],
            format!("value is {n}, so value * 2 prints {}.", n * 2),
        ),
        QuestionType::CodeAnalysis => (
            format!(
                "[{h}] For {lo_id}, what does this function return when called with an empty list?\n\n```python\ndef has_items(xs):\n    return len(xs) > {}\n```",
                n % 2
            ),
            ["False".into(), "True".into(), "None".into()],
            "len([]) is 0 and the comparison is false.".into(),
        ),
    };
    let code_in_stem = matches!(qtype, QuestionType::CorrectOutput | QuestionType::CodeAnalysis);
    let [a, b, c] = choices;
    let out = Out {
        question,
        choices: [
            OutChoice { option: "A", text: a },
            OutChoice { option: "B", text: b },
            OutChoice { option: "C", text: c },
        ],
        correct_answer: "A",
        code_in_stem,
        explanation,
    };
    serde_json::to_string_pretty(&out).expect("plain struct serializes")
}

/// Offline backend. Answers from request metadata when present; otherwise
/// from a hash of the user prompt, as a recall question.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockBackend;

#[async_trait]
impl ChatBackend for MockBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }

    async fn complete(&self, req: &CompletionRequest) -> Result<CompletionResult, GatewayError> {
        req.params
            .check()
            .map_err(|e| GatewayError::InvalidParams(e.to_string()))?;
        let started = Instant::now();
        let raw_text = match &req.meta {
            Some(RequestMeta { lo_id, question_type }) => mock_generate(lo_id, *question_type),
            None => mock_generate(&tag(&req.user, QuestionType::Recall), QuestionType::Recall),
        };
        Ok(CompletionResult {
            raw_text,
            latency: started.elapsed(),
            backend: BackendKind::Mock,
            attempt: 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use quizforge_core::{lint_mcq, parse_mcq, BloomLevel, ParseContext};

    fn ctx(qt: QuestionType) -> ParseContext {
        ParseContext {
            mcq_id: "x".into(),
            lo_id: "lo-1".into(),
            question_type: qt,
            bloom: BloomLevel::Apply,
            model: "mock".into(),
            created_at: "2026-01-01T00:00:00Z".parse().unwrap(),
        }
    }

    #[test]
    fn deterministic() {
        for qt in QuestionType::ALL {
            assert_eq!(mock_generate("lo-1", qt), mock_generate("lo-1", qt));
        }
    }

    #[test]
    fn parses_lint_clean_with_key_a() {
        for qt in QuestionType::ALL {
            let m = parse_mcq(&mock_generate("lo-1", qt), &ctx(qt)).unwrap();
            assert_eq!(m.correct_answer.as_str(), "A");
            assert!(lint_mcq(&m).is_empty(), "{qt:?}: {:?}", lint_mcq(&m));
        }
    }

    #[test]
    fn code_types_have_fenced_stems() {
        let m = parse_mcq(
            &mock_generate("lo-1", QuestionType::CorrectOutput),
            &ctx(QuestionType::CorrectOutput),
        )
        .unwrap();
        assert!(m.code_in_stem);
        assert!(m.stem.contains("```python"));
        let raw = mock_generate("lo-1", QuestionType::Recall);
        assert!(raw.contains("\"code_in_stem\": false"));
    }

    #[test]
    fn stems_differ_by_lo_and_type() {
        let stem = |lo: &str, qt| parse_mcq(&mock_generate(lo, qt), &ctx(qt)).unwrap().stem;
        assert_ne!(stem("lo-1", QuestionType::Recall), stem("lo-2", QuestionType::Recall));
        assert_ne!(
            tag("lo-1", QuestionType::Recall),
            tag("lo-1", QuestionType::FillInTheBlank)
        );
    }

    #[tokio::test]
    async fn backend_uses_meta() {
        let req = CompletionRequest {
            system: "s".into(),
            user: "u".into(),
            params: Default::default(),
            meta: Some(RequestMeta {
                lo_id: "lo-9".into(),
                question_type: QuestionType::CodeAnalysis,
            }),
        };
        let r = MockBackend.complete(&req).await.unwrap();
        assert_eq!(r.raw_text, mock_generate("lo-9", QuestionType::CodeAnalysis));
        assert_eq!(r.attempt, 1);
        assert_eq!(r.backend, BackendKind::Mock);
    }
}
