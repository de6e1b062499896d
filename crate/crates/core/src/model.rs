//! Shared domain types: Bloom levels, question types, courses, MCQs and
//! generation parameters.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cognitive level of a learning objective in the revised Bloom's taxonomy.
///
/// `Unassigned` is used for objectives that could not be categorized (for
/// example because they carry no action verb).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BloomLevel {
    Remember,
    Understand,
    Apply,
    Analyze,
    Evaluate,
    Create,
    #[serde(alias = "n/a", alias = "na")]
    Unassigned,
}

impl BloomLevel {
    pub const ALL: [BloomLevel; 7] = [
        BloomLevel::Remember,
        BloomLevel::Understand,
        BloomLevel::Apply,
        BloomLevel::Analyze,
        BloomLevel::Evaluate,
        BloomLevel::Create,
        BloomLevel::Unassigned,
    ];

    /// The six real taxonomy levels, lowest to highest.
    pub const ASSIGNED: [BloomLevel; 6] = [
        BloomLevel::Remember,
        BloomLevel::Understand,
        BloomLevel::Apply,
        BloomLevel::Analyze,
        BloomLevel::Evaluate,
        BloomLevel::Create,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BloomLevel::Remember => "remember",
            BloomLevel::Understand => "understand",
            BloomLevel::Apply => "apply",
            BloomLevel::Analyze => "analyze",
            BloomLevel::Evaluate => "evaluate",
            BloomLevel::Create => "create",
            BloomLevel::Unassigned => "unassigned",
        }
    }

    /// Three-letter column abbreviation used in summary tables.
    pub fn abbrev(self) -> &'static str {
        match self {
            BloomLevel::Remember => "RMB",
            BloomLevel::Understand => "UND",
            BloomLevel::Apply => "APP",
            BloomLevel::Analyze => "ANL",
            BloomLevel::Evaluate => "EVL",
            BloomLevel::Create => "CRT",
            BloomLevel::Unassigned => "N/A",
        }
    }

    pub fn is_assigned(self) -> bool {
        self != BloomLevel::Unassigned
    }
}

impl fmt::Display for BloomLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BloomLevel {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "remember" => Ok(BloomLevel::Remember),
            "understand" => Ok(BloomLevel::Understand),
            "apply" => Ok(BloomLevel::Apply),
            "analyze" | "analyse" => Ok(BloomLevel::Analyze),
            "evaluate" => Ok(BloomLevel::Evaluate),
            "create" => Ok(BloomLevel::Create),
            "unassigned" | "n/a" | "na" => Ok(BloomLevel::Unassigned),
            _ => Err(ParseEnumError::new("bloom level", s)),
        }
    }
}

/// The five kinds of programming MCQ the pipeline can request.
///
/// Declaration order is the canonical plan order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    Recall,
    FillInTheBlank,
    ScenarioBased,
    CorrectOutput,
    CodeAnalysis,
}

impl QuestionType {
    pub const ALL: [QuestionType; 5] = [
        QuestionType::Recall,
        QuestionType::FillInTheBlank,
        QuestionType::ScenarioBased,
        QuestionType::CorrectOutput,
        QuestionType::CodeAnalysis,
    ];

    /// Identifier used in file names and config files.
    pub fn slug(self) -> &'static str {
        match self {
            QuestionType::Recall => "recall",
            QuestionType::FillInTheBlank => "fill_in_the_blank",
            QuestionType::ScenarioBased => "scenario_based",
            QuestionType::CorrectOutput => "correct_output",
            QuestionType::CodeAnalysis => "code_analysis",
        }
    }

    /// Human-facing name, as it appears inside prompts.
    pub fn display_name(self) -> &'static str {
        match self {
            QuestionType::Recall => "Recall",
            QuestionType::FillInTheBlank => "Fill in the Blank",
            QuestionType::ScenarioBased => "Scenario Based",
            QuestionType::CorrectOutput => "Correct Output",
            QuestionType::CodeAnalysis => "Code Analysis",
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for QuestionType {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| if c == ' ' || c == '-' { '_' } else { c })
            .collect();
        QuestionType::ALL
            .into_iter()
            .find(|t| t.slug() == norm)
            .ok_or_else(|| ParseEnumError::new("question type", s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind}: {value:?}")]
pub struct ParseEnumError {
    pub kind: &'static str,
    pub value: String,
}

impl ParseEnumError {
    pub(crate) fn new(kind: &'static str, value: &str) -> Self {
        Self {
            kind,
            value: value.to_string(),
        }
    }
}

/// Answer-choice label. MCQs always carry exactly three choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OptionLabel {
    A,
    B,
    C,
}

impl OptionLabel {
    pub const ALL: [OptionLabel; 3] = [OptionLabel::A, OptionLabel::B, OptionLabel::C];

    pub fn as_str(self) -> &'static str {
        match self {
            OptionLabel::A => "A",
            OptionLabel::B => "B",
            OptionLabel::C => "C",
        }
    }
}

impl fmt::Display for OptionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptionLabel {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(OptionLabel::A),
            "B" | "b" => Ok(OptionLabel::B),
            "C" | "c" => Ok(OptionLabel::C),
            _ => Err(ParseEnumError::new("option label", s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub option: OptionLabel,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum McqSource {
    Generated,
    Human,
}

impl McqSource {
    pub fn as_str(self) -> &'static str {
        match self {
            McqSource::Generated => "generated",
            McqSource::Human => "human",
        }
    }
}

impl FromStr for McqSource {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "generated" | "gpt" => Ok(McqSource::Generated),
            "human" => Ok(McqSource::Human),
            _ => Err(ParseEnumError::new("mcq source", s)),
        }
    }
}

/// A validated single-key multiple-choice question.
///
/// Construct through [`validate_mcq`]; the invariants (three choices with
/// unique labels, key among them, nonempty stem) are checked there and again
/// whenever a record is loaded from disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Mcq {
    pub id: String,
    pub lo_id: String,
    pub question_type: QuestionType,
    pub bloom: BloomLevel,
    pub source: McqSource,
    pub stem: String,
    pub choices: Vec<Choice>,
    pub correct_answer: OptionLabel,
    pub code_in_stem: bool,
    pub explanation: String,
    pub model: String,
    pub created_at: DateTime<Utc>,
}

impl Mcq {
    /// Re-check the type invariants on an already-built value.
    pub fn check(&self) -> Result<(), McqError> {
        if self.stem.trim().is_empty() {
            return Err(McqError::EmptyStem);
        }
        if self.choices.len() != 3 {
            return Err(McqError::ChoiceCountNot3(self.choices.len()));
        }
        let mut seen = HashSet::new();
        for c in &self.choices {
            if !seen.insert(c.option) {
                return Err(McqError::DuplicateOptionLabel(c.option.to_string()));
            }
        }
        if !seen.contains(&self.correct_answer) {
            return Err(McqError::KeyNotInChoices(self.correct_answer.to_string()));
        }
        Ok(())
    }

    pub fn choice(&self, label: OptionLabel) -> Option<&Choice> {
        self.choices.iter().find(|c| c.option == label)
    }

    /// Project back onto the loose record shape accepted by [`validate_mcq`].
    pub fn to_raw(&self) -> RawMcq {
        RawMcq {
            id: Some(self.id.clone()),
            lo_id: Some(self.lo_id.clone()),
            question_type: Some(self.question_type),
            bloom: Some(self.bloom),
            source: Some(self.source),
            stem: Some(self.stem.clone()),
            choices: Some(
                self.choices
                    .iter()
                    .map(|c| RawChoice {
                        option: Some(c.option.to_string()),
                        text: Some(c.text.clone()),
                    })
                    .collect(),
            ),
            correct_answer: Some(self.correct_answer.to_string()),
            code_in_stem: Some(self.code_in_stem),
            explanation: Some(self.explanation.clone()),
            model: Some(self.model.clone()),
            created_at: Some(self.created_at),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawChoice {
    #[serde(default)]
    pub option: Option<String>,
    #[serde(default)]
    pub text: Option<String>,
}

/// Unvalidated MCQ record, every field optional. Field names match [`Mcq`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RawMcq {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub lo_id: Option<String>,
    #[serde(default)]
    pub question_type: Option<QuestionType>,
    #[serde(default)]
    pub bloom: Option<BloomLevel>,
    #[serde(default)]
    pub source: Option<McqSource>,
    #[serde(default)]
    pub stem: Option<String>,
    #[serde(default)]
    pub choices: Option<Vec<RawChoice>>,
    #[serde(default)]
    pub correct_answer: Option<String>,
    #[serde(default)]
    pub code_in_stem: Option<bool>,
    #[serde(default)]
    pub explanation: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub created_at: Option<DateTime<Utc>>,
}

impl RawMcq {
    /// Fill bookkeeping fields that hand-written records usually omit:
    /// source (human), model (empty), creation time, and the code flag,
    /// derived from the stem. Present values are kept.
    pub fn fill_missing_provenance(&mut self, created_at: DateTime<Utc>) {
        self.source.get_or_insert(McqSource::Human);
        self.model.get_or_insert_with(String::new);
        self.created_at.get_or_insert(created_at);
        if self.code_in_stem.is_none() {
            self.code_in_stem = self.stem.as_deref().map(crate::lint::has_stem_fence);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum McqError {
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("expected exactly 3 choices, found {0}")]
    ChoiceCountNot3(usize),
    #[error("correct answer {0:?} is not one of the choice labels")]
    KeyNotInChoices(String),
    #[error("choice label {0:?} appears more than once")]
    DuplicateOptionLabel(String),
    #[error("choice label {0:?} is not one of A, B, C")]
    InvalidOptionLabel(String),
    #[error("stem is empty")]
    EmptyStem,
}

/// Validate a raw record into an [`Mcq`]. Never repairs: any violation is an
/// error.
pub fn validate_mcq(raw: &RawMcq) -> Result<Mcq, McqError> {
    fn req<T: Clone>(v: &Option<T>, name: &'static str) -> Result<T, McqError> {
        v.clone().ok_or(McqError::MissingField(name))
    }

    let id = req(&raw.id, "id")?;
    let lo_id = req(&raw.lo_id, "loId")?;
    let question_type = req(&raw.question_type, "questionType")?;
    let bloom = req(&raw.bloom, "bloom")?;
    let source = req(&raw.source, "source")?;
    let stem = req(&raw.stem, "stem")?;
    let raw_choices = raw.choices.as_ref().ok_or(McqError::MissingField("choices"))?;
    let key = req(&raw.correct_answer, "correctAnswer")?;
    let code_in_stem = req(&raw.code_in_stem, "codeInStem")?;
    let explanation = req(&raw.explanation, "explanation")?;
    let model = req(&raw.model, "model")?;
    let created_at = req(&raw.created_at, "createdAt")?;

    let (choices, correct_answer) = validate_choices(raw_choices, &key)?;
    if stem.trim().is_empty() {
        return Err(McqError::EmptyStem);
    }

    Ok(Mcq {
        id,
        lo_id,
        question_type,
        bloom,
        source,
        stem,
        choices,
        correct_answer,
        code_in_stem,
        explanation,
        model,
        created_at,
    })
}

/// Shared choice/key validation, also used by the model-output parser.
pub(crate) fn validate_choices(
    raw_choices: &[RawChoice],
    key: &str,
) -> Result<(Vec<Choice>, OptionLabel), McqError> {
    if raw_choices.len() != 3 {
        return Err(McqError::ChoiceCountNot3(raw_choices.len()));
    }
    let mut seen = BTreeSet::new();
    let mut choices = Vec::with_capacity(3);
    for rc in raw_choices {
        let label = rc
            .option
            .as_deref()
            .ok_or(McqError::MissingField("choices[].option"))?;
        let text = rc
            .text
            .clone()
            .ok_or(McqError::MissingField("choices[].text"))?;
        if !seen.insert(label.trim().to_string()) {
            return Err(McqError::DuplicateOptionLabel(label.to_string()));
        }
        let option: OptionLabel = label
            .parse()
            .map_err(|_| McqError::InvalidOptionLabel(label.to_string()))?;
        choices.push(Choice { option, text });
    }
    let correct_answer = choices
        .iter()
        .map(|c| c.option)
        .find(|o| o.as_str() == key.trim())
        .ok_or_else(|| McqError::KeyNotInChoices(key.to_string()))?;
    Ok((choices, correct_answer))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearningObjective {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloom: Option<BloomLevel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CourseModule {
    pub name: String,
    #[serde(default)]
    pub los: Vec<LearningObjective>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Course {
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub course_level_los: Vec<String>,
    pub modules: Vec<CourseModule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CourseError {
    #[error("course file is not valid JSON: {0}")]
    Json(String),
    #[error("course title is empty")]
    EmptyTitle,
    #[error("course has no modules")]
    NoModules,
    #[error("module #{0} has an empty name")]
    EmptyModuleName(usize),
    #[error("learning objective id {0:?} is used more than once")]
    DuplicateLoId(String),
    #[error("learning objective {0:?} has empty text")]
    EmptyLoText(String),
    #[error("unknown bloom level on learning objectives: {}", .0.join(", "))]
    InvalidBloom(Vec<String>),
}

// Course file shape before the bloom strings are checked, so that every bad
// LO can be reported at once instead of failing on the first.
#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CourseFile {
    title: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    course_level_los: Vec<String>,
    #[serde(default)]
    modules: Vec<ModuleFile>,
}

#[derive(Deserialize)]
struct ModuleFile {
    name: String,
    #[serde(default)]
    los: Vec<LoFile>,
}

#[derive(Deserialize)]
struct LoFile {
    id: String,
    text: String,
    #[serde(default)]
    bloom: Option<String>,
}

impl Course {
    /// Parse and validate a course file.
    pub fn from_json(text: &str) -> Result<Course, CourseError> {
        let file: CourseFile =
            serde_json::from_str(text).map_err(|e| CourseError::Json(e.to_string()))?;
        let mut bad = Vec::new();
        let modules = file
            .modules
            .into_iter()
            .map(|m| CourseModule {
                name: m.name,
                los: m
                    .los
                    .into_iter()
                    .map(|lo| {
                        let bloom = match lo.bloom.as_deref() {
                            None => None,
                            Some(s) => match s.parse::<BloomLevel>() {
                                Ok(b) => Some(b),
                                Err(_) => {
                                    bad.push(lo.id.clone());
                                    None
                                }
                            },
                        };
                        LearningObjective {
                            id: lo.id,
                            text: lo.text,
                            bloom,
                        }
                    })
                    .collect(),
            })
            .collect();
        if !bad.is_empty() {
            return Err(CourseError::InvalidBloom(bad));
        }
        let course = Course {
            title: file.title,
            description: file.description,
            course_level_los: file.course_level_los,
            modules,
        };
        course.check()?;
        Ok(course)
    }

    pub fn check(&self) -> Result<(), CourseError> {
        if self.title.trim().is_empty() {
            return Err(CourseError::EmptyTitle);
        }
        if self.modules.is_empty() {
            return Err(CourseError::NoModules);
        }
        let mut ids = HashSet::new();
        for (i, m) in self.modules.iter().enumerate() {
            if m.name.trim().is_empty() {
                return Err(CourseError::EmptyModuleName(i));
            }
            for lo in &m.los {
                if !ids.insert(lo.id.as_str()) {
                    return Err(CourseError::DuplicateLoId(lo.id.clone()));
                }
                if lo.text.trim().is_empty() {
                    return Err(CourseError::EmptyLoText(lo.id.clone()));
                }
            }
        }
        Ok(())
    }

    /// All learning objectives paired with the name of their module, in file order.
    pub fn los(&self) -> impl Iterator<Item = (&str, &LearningObjective)> {
        self.modules
            .iter()
            .flat_map(|m| m.los.iter().map(move |lo| (m.name.as_str(), lo)))
    }

    pub fn lo_count(&self) -> usize {
        self.modules.iter().map(|m| m.los.len()).sum()
    }

    pub fn find_lo(&self, lo_id: &str) -> Option<(&str, &LearningObjective)> {
        self.los().find(|(_, lo)| lo.id == lo_id)
    }
}

/// Sampling parameters passed to the chat-completion endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenerationParams {
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub max_tokens: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            model: "gpt-4-0613".to_string(),
            temperature: 1.0,
            top_p: 1.0,
            frequency_penalty: 0.0,
            presence_penalty: 0.0,
            max_tokens: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid generation parameter {name}: {detail}")]
pub struct ParamsError {
    pub name: &'static str,
    pub detail: String,
}

impl GenerationParams {
    pub fn check(&self) -> Result<(), ParamsError> {
        if self.model.trim().is_empty() {
            return Err(ParamsError {
                name: "model",
                detail: "must not be empty".into(),
            });
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(ParamsError {
                name: "temperature",
                detail: format!("{} is not >= 0", self.temperature),
            });
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(ParamsError {
                name: "top_p",
                detail: format!("{} is not in (0, 1]", self.top_p),
            });
        }
        if !self.frequency_penalty.is_finite() || !self.presence_penalty.is_finite() {
            return Err(ParamsError {
                name: "penalty",
                detail: "must be finite".into(),
            });
        }
        if self.max_tokens == 0 {
            return Err(ParamsError {
                name: "max_tokens",
                detail: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_example() -> RawMcq {
        serde_json::from_value(serde_json::json!({
            "id": "m1",
            "loId": "lo-1",
            "questionType": "recall",
            "bloom": "understand",
            "source": "generated",
            "stem": "Which of the following methods can be used to remove a single element from a list in Python?",
            "choices": [
                {"option": "A", "text": "pop()"},
                {"option": "B", "text": "delete()"},
                {"option": "C", "text": "clear()"}
            ],
            "correctAnswer": "A",
            "codeInStem": false,
            "explanation": "clear() will remove all elements.",
            "model": "gpt-4-0613",
            "createdAt": "2026-01-02T03:04:05Z"
        }))
        .unwrap()
    }

    #[test]
    fn valid_record() {
        let mcq = validate_mcq(&raw_example()).unwrap();
        assert_eq!(mcq.correct_answer, OptionLabel::A);
        assert_eq!(mcq.choices.len(), 3);
        assert_eq!(mcq.choice(OptionLabel::B).unwrap().text, "delete()");
    }

    #[test]
    fn two_choices_rejected() {
        let mut raw = raw_example();
        raw.choices.as_mut().unwrap().pop();
        assert_eq!(validate_mcq(&raw), Err(McqError::ChoiceCountNot3(2)));
    }

    #[test]
    fn four_choices_rejected() {
        let mut raw = raw_example();
        raw.choices.as_mut().unwrap().push(RawChoice {
            option: Some("D".into()),
            text: Some("remove()".into()),
        });
        assert_eq!(validate_mcq(&raw), Err(McqError::ChoiceCountNot3(4)));
    }

    #[test]
    fn key_outside_choices() {
        let mut raw = raw_example();
        raw.correct_answer = Some("D".into());
        assert_eq!(
            validate_mcq(&raw),
            Err(McqError::KeyNotInChoices("D".into()))
        );
    }

    #[test]
    fn duplicate_label() {
        let mut raw = raw_example();
        raw.choices.as_mut().unwrap()[1].option = Some("A".into());
        assert_eq!(
            validate_mcq(&raw),
            Err(McqError::DuplicateOptionLabel("A".into()))
        );
    }

    #[test]
    fn missing_fields_reported_by_name() {
        let mut raw = raw_example();
        raw.explanation = None;
        assert_eq!(
            validate_mcq(&raw),
            Err(McqError::MissingField("explanation"))
        );
        let mut raw = raw_example();
        raw.choices = None;
        assert_eq!(validate_mcq(&raw), Err(McqError::MissingField("choices")));
    }

    #[test]
    fn round_trip_through_json() {
        let mcq = validate_mcq(&raw_example()).unwrap();
        let json = serde_json::to_string(&mcq).unwrap();
        let raw: RawMcq = serde_json::from_str(&json).unwrap();
        assert_eq!(validate_mcq(&raw).unwrap(), mcq);
        assert_eq!(validate_mcq(&mcq.to_raw()).unwrap(), mcq);
    }

    #[test]
    fn default_params() {
        let p = GenerationParams::default();
        assert_eq!(p.model, "gpt-4-0613");
        assert_eq!(p.temperature, 1.0);
        assert_eq!(p.top_p, 1.0);
        assert_eq!(p.frequency_penalty, 0.0);
        assert_eq!(p.presence_penalty, 0.0);
        assert_eq!(p.max_tokens, 2000);
        assert!(p.check().is_ok());
        let bad = GenerationParams {
            top_p: 0.0,
            ..GenerationParams::default()
        };
        assert!(bad.check().is_err());
    }

    #[test]
    fn course_reports_every_bad_bloom() {
        let text = r#"{"title":"T","modules":[{"name":"M","los":[
            {"id":"a","text":"Explain x","bloom":"understand"},
            {"id":"b","text":"Do y","bloom":"synthesize"},
            {"id":"c","text":"Do z","bloom":"wow"}]}]}"#;
        assert_eq!(
            Course::from_json(text),
            Err(CourseError::InvalidBloom(vec!["b".into(), "c".into()]))
        );
    }

    #[test]
    fn course_invariants() {
        assert_eq!(
            Course::from_json(r#"{"title":" ","modules":[{"name":"M"}]}"#),
            Err(CourseError::EmptyTitle)
        );
        assert_eq!(
            Course::from_json(r#"{"title":"T","modules":[]}"#),
            Err(CourseError::NoModules)
        );
        let dup = r#"{"title":"T","modules":[{"name":"M","los":[
            {"id":"a","text":"x"},{"id":"a","text":"y"}]}]}"#;
        assert_eq!(
            Course::from_json(dup),
            Err(CourseError::DuplicateLoId("a".into()))
        );
    }

    #[test]
    fn enum_parsing() {
        assert_eq!("N/A".parse::<BloomLevel>().unwrap(), BloomLevel::Unassigned);
        assert_eq!(
            "Fill in the Blank".parse::<QuestionType>().unwrap(),
            QuestionType::FillInTheBlank
        );
        assert_eq!(
            "code_analysis".parse::<QuestionType>().unwrap(),
            QuestionType::CodeAnalysis
        );
        assert!("essay".parse::<QuestionType>().is_err());
        assert_eq!(BloomLevel::ALL.len(), 7);
        assert_eq!(QuestionType::ALL.len(), 5);
    }
}
