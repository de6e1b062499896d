//! Mapping from Bloom level to the question types generated for an LO.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BloomLevel, LearningObjective, QuestionType};

const DEFAULT_MAPPING: &str = include_str!("../resources/mapping.json");

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("cannot read mapping {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("mapping file is malformed: {0}")]
    Parse(String),
    #[error("mapping has no entry for {0}")]
    MissingLevel(BloomLevel),
    #[error("mapping for {0} is empty")]
    EmptyLevel(BloomLevel),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("learning objectives without a bloom level: {}", .0.join(", "))]
    UnclassifiedLo(Vec<String>),
}

/// Level-to-types table. Every level maps to a nonempty set kept in
/// canonical [`QuestionType`] order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeMapping {
    table: BTreeMap<BloomLevel, Vec<QuestionType>>,
}

impl Default for TypeMapping {
    fn default() -> Self {
        TypeMapping::from_json(DEFAULT_MAPPING).expect("bundled mapping is valid")
    }
}

impl TypeMapping {
    pub fn from_json(text: &str) -> Result<TypeMapping, MappingError> {
        let raw: BTreeMap<BloomLevel, Vec<QuestionType>> =
            serde_json::from_str(text).map_err(|e| MappingError::Parse(e.to_string()))?;
        let mut table = BTreeMap::new();
        for level in BloomLevel::ALL {
            let mut types = raw
                .get(&level)
                .cloned()
                .ok_or(MappingError::MissingLevel(level))?;
            types.sort();
            types.dedup();
            if types.is_empty() {
                return Err(MappingError::EmptyLevel(level));
            }
            table.insert(level, types);
        }
        Ok(TypeMapping { table })
    }

    pub fn load(path: &Path) -> Result<TypeMapping, MappingError> {
        let text = std::fs::read_to_string(path).map_err(|source| MappingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        TypeMapping::from_json(&text)
    }

    pub fn map_types(&self, bloom: BloomLevel) -> &[QuestionType] {
        // from_json guarantees every level is present
        &self.table[&bloom]
    }
}

/// Question types to generate for one learning objective.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TypePlan {
    pub lo_id: String,
    pub bloom: BloomLevel,
    pub types: Vec<QuestionType>,
}

/// Types for `bloom` under the default mapping.
pub fn map_types(bloom: BloomLevel) -> Vec<QuestionType> {
    TypeMapping::default().map_types(bloom).to_vec()
}

/// One plan entry per LO. Every LO must already carry a bloom value.
pub fn plan_generation<'a, I>(los: I, mapping: &TypeMapping) -> Result<Vec<TypePlan>, PlanError>
where
    I: IntoIterator<Item = &'a LearningObjective>,
{
    let mut plans = Vec::new();
    let mut unclassified = Vec::new();
    for lo in los {
        match lo.bloom {
            Some(bloom) => plans.push(TypePlan {
                lo_id: lo.id.clone(),
                bloom,
                types: mapping.map_types(bloom).to_vec(),
            }),
            None => unclassified.push(lo.id.clone()),
        }
    }
    if !unclassified.is_empty() {
        return Err(PlanError::UnclassifiedLo(unclassified));
    }
    Ok(plans)
}

/// Planned counts broken down by question type and Bloom level.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PlanSummary {
    pub lo_count: usize,
    pub by_level: BTreeMap<BloomLevel, usize>,
    pub cells: BTreeMap<QuestionType, BTreeMap<BloomLevel, usize>>,
    pub by_type: BTreeMap<QuestionType, usize>,
    pub total: usize,
}

impl PlanSummary {
    pub fn from_plans(plans: &[TypePlan]) -> PlanSummary {
        let mut s = PlanSummary {
            lo_count: plans.len(),
            ..PlanSummary::default()
        };
        for t in QuestionType::ALL {
            s.by_type.insert(t, 0);
        }
        for p in plans {
            *s.by_level.entry(p.bloom).or_default() += 1;
            for &t in &p.types {
                *s.cells.entry(t).or_default().entry(p.bloom).or_default() += 1;
                *s.by_type.entry(t).or_default() += 1;
                s.total += 1;
            }
        }
        s
    }

    pub fn type_total(&self, t: QuestionType) -> usize {
        self.by_type.get(&t).copied().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use QuestionType::*;

    fn lo(id: &str, bloom: Option<BloomLevel>) -> LearningObjective {
        LearningObjective {
            id: id.into(),
            text: "x".into(),
            bloom,
        }
    }

    #[test]
    fn default_table() {
        let m = TypeMapping::default();
        assert_eq!(m.map_types(BloomLevel::Remember), &[Recall, FillInTheBlank]);
        assert_eq!(m.map_types(BloomLevel::Understand), &[Recall, FillInTheBlank]);
        assert_eq!(
            m.map_types(BloomLevel::Apply),
            &[FillInTheBlank, ScenarioBased, CorrectOutput, CodeAnalysis]
        );
        assert_eq!(m.map_types(BloomLevel::Analyze), m.map_types(BloomLevel::Apply));
        assert_eq!(m.map_types(BloomLevel::Evaluate), &[CorrectOutput, CodeAnalysis]);
        assert_eq!(m.map_types(BloomLevel::Create), &[CodeAnalysis]);
        assert_eq!(m.map_types(BloomLevel::Unassigned), &QuestionType::ALL);
    }

    #[test]
    fn image_is_nonempty_everywhere() {
        for level in BloomLevel::ALL {
            assert!(!map_types(level).is_empty());
        }
    }

    #[test]
    fn override_is_sorted_and_checked() {
        let text = r#"{"remember":["fill_in_the_blank","recall","recall"],"understand":["recall"],
            "apply":["recall"],"analyze":["recall"],"evaluate":["recall"],"create":["recall"],
            "unassigned":["recall"]}"#;
        let m = TypeMapping::from_json(text).unwrap();
        assert_eq!(m.map_types(BloomLevel::Remember), &[Recall, FillInTheBlank]);

        let missing = r#"{"remember":["recall"]}"#;
        assert!(matches!(
            TypeMapping::from_json(missing),
            Err(MappingError::MissingLevel(_))
        ));
        let empty = text.replace(r#""create":["recall"]"#, r#""create":[]"#);
        assert!(matches!(
            TypeMapping::from_json(&empty),
            Err(MappingError::EmptyLevel(BloomLevel::Create))
        ));
        assert!(matches!(
            TypeMapping::from_json(r#"{"remember":["essay"]}"#),
            Err(MappingError::Parse(_))
        ));
    }

    #[test]
    fn empty_plan() {
        let plans = plan_generation(&[], &TypeMapping::default()).unwrap();
        assert!(plans.is_empty());
        assert_eq!(PlanSummary::from_plans(&plans).total, 0);
    }

    #[test]
    fn evaluate_lo() {
        let los = [lo("e", Some(BloomLevel::Evaluate))];
        let plans = plan_generation(&los, &TypeMapping::default()).unwrap();
        assert_eq!(plans[0].types, vec![CorrectOutput, CodeAnalysis]);
    }

    #[test]
    fn unclassified_listed() {
        let los = [
            lo("a", None),
            lo("b", Some(BloomLevel::Apply)),
            lo("c", None),
        ];
        assert_eq!(
            plan_generation(&los, &TypeMapping::default()),
            Err(PlanError::UnclassifiedLo(vec!["a".into(), "c".into()]))
        );
    }
}
