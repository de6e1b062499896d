//! Turning raw model output into a validated [`Mcq`].

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::lint::has_stem_fence;
use crate::model::{
    validate_choices, BloomLevel, Mcq, McqError, McqSource, QuestionType, RawChoice,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no JSON object found in model output")]
    NoJsonFound,
    #[error("model output JSON is malformed: {0}")]
    JsonMalformed(String),
    #[error("code_in_stem must be a boolean or \"True\"/\"False\", got {0}")]
    InvalidCodeFlag(String),
    #[error(transparent)]
    Invalid(#[from] McqError),
}

/// Metadata attached to a parsed MCQ; none of it comes from the model text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseContext {
    pub mcq_id: String,
    pub lo_id: String,
    pub question_type: QuestionType,
    pub bloom: BloomLevel,
    pub model: String,
    pub created_at: DateTime<Utc>,
}

impl ParseContext {
    pub fn for_mcq(mcq: &Mcq) -> ParseContext {
        ParseContext {
            mcq_id: mcq.id.clone(),
            lo_id: mcq.lo_id.clone(),
            question_type: mcq.question_type,
            bloom: mcq.bloom,
            model: mcq.model.clone(),
            created_at: mcq.created_at,
        }
    }
}

#[derive(Debug, Deserialize)]
struct ModelOutput {
    question: Option<String>,
    choices: Option<Vec<RawChoice>>,
    #[serde(rename = "correctAnswer", alias = "correct_answer")]
    correct_answer: Option<String>,
    #[serde(alias = "codeInStem")]
    code_in_stem: Option<Value>,
    explanation: Option<String>,
}

/// Wire shape the model is asked to produce.
#[derive(Debug, Serialize)]
struct ModelOutputOut<'a> {
    question: &'a str,
    choices: Vec<RawChoice>,
    #[serde(rename = "correctAnswer")]
    correct_answer: &'a str,
    code_in_stem: bool,
    explanation: &'a str,
}

/// Byte range of every balanced top-level `{...}` in `text`, in order.
/// Braces inside JSON string literals are ignored.
fn balanced_objects(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut found = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'{' {
            i += 1;
            continue;
        }
        let start = i;
        let mut depth = 0usize;
        let mut in_str = false;
        let mut escaped = false;
        let mut end = None;
        for (j, &b) in bytes.iter().enumerate().skip(start) {
            if in_str {
                if escaped {
                    escaped = false;
                } else if b == b'\\' {
                    escaped = true;
                } else if b == b'"' {
                    in_str = false;
                }
                continue;
            }
            match b {
                b'"' => in_str = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(j);
                        break;
                    }
                }
                _ => {}
            }
        }
        match end {
            Some(j) => {
                found.push(&text[start..=j]);
                i = j + 1;
            }
            None => i = start + 1,
        }
    }
    found
}

/// First balanced JSON object in `text` with a `question` key, or failing
/// that the first object at all. Surrounding prose and markdown fences are
/// ignored.
pub fn extract_json_object(text: &str) -> Result<serde_json::Map<String, Value>, ParseError> {
    if !text.contains('{') {
        return Err(ParseError::NoJsonFound);
    }
    let mut first_err = None;
    let mut first_obj = None;
    for candidate in balanced_objects(text) {
        match serde_json::from_str::<Value>(candidate) {
            Ok(Value::Object(map)) if map.contains_key("question") => return Ok(map),
            Ok(Value::Object(map)) => {
                first_obj.get_or_insert(map);
            }
            Ok(_) => {}
            Err(e) => {
                first_err.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if let Some(map) = first_obj {
        return Ok(map);
    }
    Err(ParseError::JsonMalformed(
        first_err.unwrap_or_else(|| "unbalanced braces".to_string()),
    ))
}

fn code_flag(v: &Value) -> Result<bool, ParseError> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::String(s) if s.eq_ignore_ascii_case("true") => Ok(true),
        Value::String(s) if s.eq_ignore_ascii_case("false") => Ok(false),
        other => Err(ParseError::InvalidCodeFlag(other.to_string())),
    }
}

/// Parse model output into a generated MCQ.
///
/// `code_in_stem` may be a JSON boolean or the strings "True"/"False". When
/// the model omits it the flag is derived from whether the stem contains a
/// fenced code block.
pub fn parse_mcq(raw_text: &str, ctx: &ParseContext) -> Result<Mcq, ParseError> {
    let obj = extract_json_object(raw_text)?;
    let out: ModelOutput = serde_json::from_value(Value::Object(obj))
        .map_err(|e| ParseError::JsonMalformed(e.to_string()))?;

    let stem = out.question.ok_or(McqError::MissingField("question"))?;
    let raw_choices = out.choices.ok_or(McqError::MissingField("choices"))?;
    let key = out
        .correct_answer
        .ok_or(McqError::MissingField("correctAnswer"))?;
    let explanation = out
        .explanation
        .ok_or(McqError::MissingField("explanation"))?;
    let code_in_stem = match out.code_in_stem {
        Some(v) => code_flag(&v)?,
        None => has_stem_fence(&stem),
    };
    let (choices, correct_answer) = validate_choices(&raw_choices, &key)?;

    let mcq = Mcq {
        id: ctx.mcq_id.clone(),
        lo_id: ctx.lo_id.clone(),
        question_type: ctx.question_type,
        bloom: ctx.bloom,
        source: McqSource::Generated,
        stem,
        choices,
        correct_answer,
        code_in_stem,
        explanation,
        model: ctx.model.clone(),
        created_at: ctx.created_at,
    };
    mcq.check()?;
    Ok(mcq)
}

/// Render an MCQ in the output format the model is asked to use.
pub fn to_model_output(mcq: &Mcq) -> String {
    let out = ModelOutputOut {
        question: &mcq.stem,
        choices: mcq
            .choices
            .iter()
            .map(|c| RawChoice {
                option: Some(c.option.to_string()),
                text: Some(c.text.clone()),
            })
            .collect(),
        correct_answer: mcq.correct_answer.as_str(),
        code_in_stem: mcq.code_in_stem,
        explanation: &mcq.explanation,
    };
    serde_json::to_string_pretty(&out).expect("plain struct serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OptionLabel;

    pub(crate) const EXAMPLE_1: &str = r#"{
    "question": "Which of the following methods can be used to remove a single element from a list in Python?",
    "choices": [{"option": "A", "text": "pop()"}, {"option": "B", "text": "delete()"}, {"option": "C", "text": "clear()"}],
    "correctAnswer": "A",
    "explanation": "clear() will remove all elements, you can use del but not delate() to remove element."
}"#;

    fn ctx() -> ParseContext {
        ParseContext {
            mcq_id: "m".into(),
            lo_id: "lo-1".into(),
            question_type: QuestionType::Recall,
            bloom: BloomLevel::Understand,
            model: "gpt-4-0613".into(),
            created_at: "2026-01-01T00:00:00Z".parse().unwrap(),
        }
    }

    #[test]
    fn example_one() {
        let mcq = parse_mcq(EXAMPLE_1, &ctx()).unwrap();
        assert_eq!(mcq.correct_answer, OptionLabel::A);
        assert_eq!(mcq.choices[0].text, "pop()");
        assert!(!mcq.code_in_stem);
        assert_eq!(mcq.source, McqSource::Generated);
        assert_eq!(mcq.lo_id, "lo-1");
    }

    #[test]
    fn prose_around_json() {
        let text = format!("Sure! Here is the question: {EXAMPLE_1}\nLet me know if you need more.");
        assert_eq!(
            parse_mcq(&text, &ctx()).unwrap(),
            parse_mcq(EXAMPLE_1, &ctx()).unwrap()
        );
        let fenced = format!("```json\n{EXAMPLE_1}\n```");
        assert!(parse_mcq(&fenced, &ctx()).is_ok());
    }

    #[test]
    fn braces_inside_strings() {
        let text = r#"Note: use {} for dicts.
{"question": "What does `{}` create?", "choices": [{"option":"A","text":"a dict"},
 {"option":"B","text":"a set"},{"option":"C","text":"a tuple"}], "correctAnswer":"A",
 "code_in_stem": "False", "explanation": "Empty braces are a dict, not a set: {"}"#;
        let mcq = parse_mcq(text, &ctx()).unwrap();
        assert_eq!(mcq.stem, "What does `{}` create?");
        assert!(mcq.explanation.ends_with('{'));
    }

    #[test]
    fn no_braces() {
        assert_eq!(
            parse_mcq("I cannot help with that.", &ctx()),
            Err(ParseError::NoJsonFound)
        );
    }

    #[test]
    fn malformed() {
        assert!(matches!(
            parse_mcq(r#"{"question": "x", }"#, &ctx()),
            Err(ParseError::JsonMalformed(_))
        ));
        assert!(matches!(
            parse_mcq(r#"{"question": "x""#, &ctx()),
            Err(ParseError::JsonMalformed(_))
        ));
    }

    #[test]
    fn validation_errors_propagate() {
        let two = r#"{"question":"q","choices":[{"option":"A","text":"1"},{"option":"B","text":"2"}],
            "correctAnswer":"A","explanation":"e"}"#;
        assert_eq!(
            parse_mcq(two, &ctx()),
            Err(ParseError::Invalid(McqError::ChoiceCountNot3(2)))
        );
        let missing = r#"{"question":"q","correctAnswer":"A","explanation":"e"}"#;
        assert_eq!(
            parse_mcq(missing, &ctx()),
            Err(ParseError::Invalid(McqError::MissingField("choices")))
        );
    }

    #[test]
    fn code_flag_forms() {
        for (v, want) in [("true", true), ("\"True\"", true), ("\"false\"", false)] {
            let text = EXAMPLE_1.replace(
                "\"correctAnswer\": \"A\",",
                &format!("\"correctAnswer\": \"A\", \"code_in_stem\": {v},"),
            );
            assert_eq!(parse_mcq(&text, &ctx()).unwrap().code_in_stem, want);
        }
        let text = EXAMPLE_1.replace(
            "\"correctAnswer\": \"A\",",
            "\"correctAnswer\": \"A\", \"code_in_stem\": \"maybe\",",
        );
        assert!(matches!(
            parse_mcq(&text, &ctx()),
            Err(ParseError::InvalidCodeFlag(_))
        ));
    }

    #[test]
    fn idempotent_over_own_serialization() {
        let mcq = parse_mcq(EXAMPLE_1, &ctx()).unwrap();
        let again = parse_mcq(&to_model_output(&mcq), &ParseContext::for_mcq(&mcq)).unwrap();
        assert_eq!(mcq, again);
    }
}
