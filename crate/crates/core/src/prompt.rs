//! System and user prompt assembly.
//!
//! The system prompt is five sections joined by blank lines: MCQ principles,
//! Bloom definitions, course context, the selected question type with its
//! examples, and the output format. Every piece comes from a text resource so
//! the wording can be edited without touching code.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BloomLevel, Course, LearningObjective, QuestionType};
use crate::template::{render, TemplateError};

/// Field names the output-format section must mention.
pub const OUTPUT_FIELDS: [&str; 5] = [
    "question",
    "choices",
    "correctAnswer",
    "code_in_stem",
    "explanation",
];

mod bundled {
    pub const PRINCIPLES: &str = include_str!("../resources/principles.txt");
    pub const BLOOM: &str = include_str!("../resources/bloom.txt");
    pub const COURSE: &str = include_str!("../resources/course.txt");
    pub const QUESTION_TYPE: &str = include_str!("../resources/question_type.txt");
    pub const OUTPUT_FORMAT: &str = include_str!("../resources/output_format.txt");
    pub const USER: &str = include_str!("../resources/user.txt");
    pub const USER_BLOOM: &str = include_str!("../resources/user_bloom.txt");

    pub const QTYPES: [(&str, &str, &str); 5] = [
        (
            "recall",
            include_str!("../resources/qtypes/recall.txt"),
            include_str!("../resources/examples/recall.json"),
        ),
        (
            "fill_in_the_blank",
            include_str!("../resources/qtypes/fill_in_the_blank.txt"),
            include_str!("../resources/examples/fill_in_the_blank.json"),
        ),
        (
            "scenario_based",
            include_str!("../resources/qtypes/scenario_based.txt"),
            include_str!("../resources/examples/scenario_based.json"),
        ),
        (
            "correct_output",
            include_str!("../resources/qtypes/correct_output.txt"),
            include_str!("../resources/examples/correct_output.json"),
        ),
        (
            "code_analysis",
            include_str!("../resources/qtypes/code_analysis.txt"),
            include_str!("../resources/examples/code_analysis.json"),
        ),
    ];
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("missing design resource: {0}")]
    MissingResource(String),
    #[error("cannot read resource {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed examples file {path}: {detail}")]
    BadExamples { path: String, detail: String },
    #[error("output format section does not mention field {0:?}")]
    OutputFormatField(&'static str),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// One worked example as shown to the model. Field order is the order the
/// output format asks for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleMcq {
    pub question: String,
    pub choices: Vec<ExampleChoice>,
    #[serde(rename = "correctAnswer")]
    pub correct_answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code_in_stem: Option<bool>,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleChoice {
    pub option: String,
    pub text: String,
}

/// Static material combined with per-request data into prompts.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignResources {
    pub mcq_principles: String,
    pub bloom_definitions: String,
    pub course_context: String,
    pub question_type_section: String,
    pub qtype_definitions: BTreeMap<QuestionType, String>,
    /// Rendered JSON text of each example, in file order.
    pub qtype_examples: BTreeMap<QuestionType, Vec<String>>,
    pub output_format_text: String,
    pub user_template: String,
    pub user_bloom_template: String,
}

fn tidy(s: &str) -> String {
    s.trim_end().to_string()
}

fn render_examples(text: &str, path: &str) -> Result<Vec<String>, PromptError> {
    let examples: Vec<ExampleMcq> =
        serde_json::from_str(text).map_err(|e| PromptError::BadExamples {
            path: path.to_string(),
            detail: e.to_string(),
        })?;
    examples
        .iter()
        .map(|ex| {
            let mut buf = Vec::new();
            let fmt = serde_json::ser::PrettyFormatter::with_indent(b"    ");
            let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
            ex.serialize(&mut ser).map_err(|e| PromptError::BadExamples {
                path: path.to_string(),
                detail: e.to_string(),
            })?;
            Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
        })
        .collect()
}

impl DesignResources {
    /// Resources compiled into the crate.
    pub fn bundled() -> DesignResources {
        let mut qtype_definitions = BTreeMap::new();
        let mut qtype_examples = BTreeMap::new();
        for (slug, def, examples) in bundled::QTYPES {
            let t: QuestionType = slug.parse().expect("bundled slug");
            qtype_definitions.insert(t, tidy(def));
            qtype_examples.insert(
                t,
                render_examples(examples, slug).expect("bundled examples are valid"),
            );
        }
        DesignResources {
            mcq_principles: tidy(bundled::PRINCIPLES),
            bloom_definitions: tidy(bundled::BLOOM),
            course_context: tidy(bundled::COURSE),
            question_type_section: tidy(bundled::QUESTION_TYPE),
            qtype_definitions,
            qtype_examples,
            output_format_text: tidy(bundled::OUTPUT_FORMAT),
            user_template: tidy(bundled::USER),
            user_bloom_template: tidy(bundled::USER_BLOOM),
        }
    }

    /// Load from a resource directory:
    /// `principles.txt`, `bloom.txt`, `output_format.txt`,
    /// `qtypes/<type>.txt` and `examples/<type>.json`.
    ///
    /// The three top-level files are required. Per-type files may be absent;
    /// building a prompt for such a type fails with `MissingResource`.
    /// `course.txt`, `question_type.txt`, `user.txt` and `user_bloom.txt` are
    /// optional overrides of the bundled layout templates.
    pub fn load(dir: &Path) -> Result<DesignResources, PromptError> {
        let read = |rel: &str| -> Result<Option<String>, PromptError> {
            let path: PathBuf = dir.join(rel);
            match std::fs::read_to_string(&path) {
                Ok(s) => Ok(Some(s)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(source) => Err(PromptError::Io {
                    path: path.display().to_string(),
                    source,
                }),
            }
        };
        let required = |rel: &str| -> Result<String, PromptError> {
            read(rel)?
                .map(|s| tidy(&s))
                .ok_or_else(|| PromptError::MissingResource(dir.join(rel).display().to_string()))
        };
        let optional = |rel: &str, fallback: &str| -> Result<String, PromptError> {
            Ok(tidy(&read(rel)?.unwrap_or_else(|| fallback.to_string())))
        };

        let mut qtype_definitions = BTreeMap::new();
        let mut qtype_examples = BTreeMap::new();
        for t in QuestionType::ALL {
            if let Some(def) = read(&format!("qtypes/{}.txt", t.slug()))? {
                qtype_definitions.insert(t, tidy(&def));
            }
            let rel = format!("examples/{}.json", t.slug());
            if let Some(ex) = read(&rel)? {
                qtype_examples.insert(t, render_examples(&ex, &rel)?);
            }
        }

        let res = DesignResources {
            mcq_principles: required("principles.txt")?,
            bloom_definitions: required("bloom.txt")?,
            output_format_text: required("output_format.txt")?,
            course_context: optional("course.txt", bundled::COURSE)?,
            question_type_section: optional("question_type.txt", bundled::QUESTION_TYPE)?,
            user_template: optional("user.txt", bundled::USER)?,
            user_bloom_template: optional("user_bloom.txt", bundled::USER_BLOOM)?,
            qtype_definitions,
            qtype_examples,
        };
        res.check_output_format()?;
        Ok(res)
    }

    fn check_output_format(&self) -> Result<(), PromptError> {
        for field in OUTPUT_FIELDS {
            if !self.output_format_text.contains(field) {
                return Err(PromptError::OutputFormatField(field));
            }
        }
        Ok(())
    }

    /// Full invariant check: every type has a definition and an example.
    pub fn check(&self) -> Result<(), PromptError> {
        self.check_output_format()?;
        for t in QuestionType::ALL {
            self.type_material(t)?;
        }
        Ok(())
    }

    fn type_material(&self, t: QuestionType) -> Result<(&str, &[String]), PromptError> {
        let def = self
            .qtype_definitions
            .get(&t)
            .ok_or_else(|| PromptError::MissingResource(format!("qtypes/{}.txt", t.slug())))?;
        let examples = self
            .qtype_examples
            .get(&t)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| PromptError::MissingResource(format!("examples/{}.json", t.slug())))?;
        Ok((def, examples))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPair {
    pub system: String,
    pub user: String,
}

pub fn build_system_prompt(
    course: &Course,
    qtype: QuestionType,
    resources: &DesignResources,
) -> Result<String, PromptError> {
    let (definition, examples) = resources.type_material(qtype)?;

    let course_los = if course.course_level_los.is_empty() {
        String::new()
    } else {
        let mut s = String::from("\n\nCourse-level learning objectives:");
        for lo in &course.course_level_los {
            s.push_str("\n- ");
            s.push_str(lo);
        }
        s
    };
    let course_section = render(
        &resources.course_context,
        &[
            ("course_title", &course.title),
            ("course_description", &course.description),
            ("course_los", &course_los),
        ],
    )?;

    let examples_text = examples
        .iter()
        .enumerate()
        .map(|(i, ex)| format!("Example {}:\n{}", i + 1, ex))
        .collect::<Vec<_>>()
        .join("\n\n");
    let qtype_section = render(
        &resources.question_type_section,
        &[
            ("question_type", qtype.display_name()),
            ("definition", definition),
            ("examples", &examples_text),
        ],
    )?;

    Ok([
        resources.mcq_principles.as_str(),
        &resources.bloom_definitions,
        &course_section,
        &qtype_section,
        &resources.output_format_text,
    ]
    .join("\n\n"))
}

/// The user message. The Bloom sentence is left out for unassigned LOs.
pub fn build_user_prompt(
    course: &Course,
    module_name: &str,
    lo: &LearningObjective,
    qtype: QuestionType,
    resources: &DesignResources,
) -> Result<String, PromptError> {
    let mut user = render(
        &resources.user_template,
        &[
            ("question_type", qtype.display_name()),
            ("course_name", &course.title),
            ("unit", module_name),
            ("learning_objective", &lo.text),
        ],
    )?;
    let bloom = lo.bloom.unwrap_or(BloomLevel::Unassigned);
    if bloom.is_assigned() {
        user.push('\n');
        user.push_str(&render(
            &resources.user_bloom_template,
            &[("bloom_level", bloom.as_str())],
        )?);
    }
    Ok(user)
}

pub fn build_prompts(
    course: &Course,
    module_name: &str,
    lo: &LearningObjective,
    qtype: QuestionType,
    resources: &DesignResources,
) -> Result<PromptPair, PromptError> {
    Ok(PromptPair {
        system: build_system_prompt(course, qtype, resources)?,
        user: build_user_prompt(course, module_name, lo, qtype, resources)?,
    })
}
