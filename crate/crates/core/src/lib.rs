//! Domain model and offline logic for generating and evaluating
//! multiple-choice questions tied to course learning objectives.

pub mod bloom;
pub mod eval;
pub mod lint;
pub mod model;
pub mod parse;
pub mod prompt;
pub mod qtype;
pub mod store;
pub mod template;

pub use bloom::{classify_lo, load_lexicon, BloomClassifier, LexiconError, VerbLexicon};
pub use lint::{lint_mcq, LintCode, LintFinding, Severity};
pub use model::{
    validate_mcq, BloomLevel, Choice, Course, CourseError, CourseModule, GenerationParams,
    LearningObjective, Mcq, McqError, McqSource, OptionLabel, QuestionType, RawMcq,
};
pub use parse::{parse_mcq, ParseContext, ParseError};
pub use prompt::{build_prompts, DesignResources, PromptError, PromptPair};
pub use qtype::{map_types, plan_generation, PlanError, PlanSummary, TypeMapping, TypePlan};
pub use store::{read_course, read_course_dir, AnswerRecord, LintStatus, McqFilter, Store, StoreError, StoredMcq};
