use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{OptionLabel, ParseEnumError};

/// The six rubric items each annotator judges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RubricItem {
    SufficientInfo,
    CorrectAnswer,
    UniqueChoices,
    NoObviousWrong,
    CorrectCode,
    LoAlignment,
}

impl RubricItem {
    pub const ALL: [RubricItem; 6] = [
        RubricItem::SufficientInfo,
        RubricItem::CorrectAnswer,
        RubricItem::UniqueChoices,
        RubricItem::NoObviousWrong,
        RubricItem::CorrectCode,
        RubricItem::LoAlignment,
    ];

    /// Categories from most to least favorable. The least-favorable
    /// tie-break picks the highest index.
    pub fn categories(self) -> &'static [&'static str] {
        match self {
            RubricItem::SufficientInfo => &["pass", "fail"],
            RubricItem::CorrectAnswer => &["single", "multiple", "none"],
            RubricItem::UniqueChoices => &["unique", "overlapping"],
            RubricItem::NoObviousWrong => &["pass", "giveaway"],
            RubricItem::CorrectCode => &["correct", "no_code", "incorrect"],
            RubricItem::LoAlignment => &["aligned", "related_not_targeting", "unrelated"],
        }
    }

    pub fn category_index(self, category: &str) -> Option<usize> {
        self.categories().iter().position(|c| *c == category)
    }

    pub fn slug(self) -> &'static str {
        match self {
            RubricItem::SufficientInfo => "sufficient_info",
            RubricItem::CorrectAnswer => "correct_answer",
            RubricItem::UniqueChoices => "unique_choices",
            RubricItem::NoObviousWrong => "no_obvious_wrong",
            RubricItem::CorrectCode => "correct_code",
            RubricItem::LoAlignment => "lo_alignment",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            RubricItem::SufficientInfo => "Sufficient information",
            RubricItem::CorrectAnswer => "Correct answer",
            RubricItem::UniqueChoices => "Unique choices",
            RubricItem::NoObviousWrong => "No obviously wrong choice",
            RubricItem::CorrectCode => "Correct code",
            RubricItem::LoAlignment => "LO alignment",
        }
    }
}

impl fmt::Display for RubricItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for RubricItem {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RubricItem::ALL
            .into_iter()
            .find(|i| i.slug() == s)
            .ok_or_else(|| ParseEnumError {
                kind: "rubric item",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RaterRole {
    Student,
    Instructor,
}

impl FromStr for RaterRole {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "student" => Ok(RaterRole::Student),
            "instructor" => Ok(RaterRole::Instructor),
            _ => Err(ParseEnumError {
                kind: "rater role",
                value: s.to_string(),
            }),
        }
    }
}

/// One rater's answer attempt plus rubric judgments for one MCQ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RubricAnnotation {
    pub mcq_id: String,
    pub rater_id: String,
    pub rater_role: RaterRole,
    pub answered_option: OptionLabel,
    pub answered_correctly: bool,
    pub judgments: BTreeMap<RubricItem, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RubricError {
    #[error("judgment for {0} is missing")]
    MissingItem(RubricItem),
    #[error("{item} has no category {category:?} (expected one of {expected})")]
    UnknownCategory {
        item: RubricItem,
        category: String,
        expected: String,
    },
}

impl RubricAnnotation {
    pub fn check(&self) -> Result<(), RubricError> {
        check_judgments(&self.judgments)
    }

    /// Category index for `item`. Only valid after [`RubricAnnotation::check`].
    pub fn category(&self, item: RubricItem) -> Option<usize> {
        self.judgments
            .get(&item)
            .and_then(|c| item.category_index(c))
    }
}

pub fn check_judgments(judgments: &BTreeMap<RubricItem, String>) -> Result<(), RubricError> {
    for item in RubricItem::ALL {
        let cat = judgments.get(&item).ok_or(RubricError::MissingItem(item))?;
        if item.category_index(cat).is_none() {
            return Err(RubricError::UnknownCategory {
                item,
                category: cat.clone(),
                expected: item.categories().join(", "),
            });
        }
    }
    Ok(())
}

/// Items and their ordered categories, as served to annotation clients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RubricSchemaItem {
    pub item: RubricItem,
    pub title: &'static str,
    pub categories: &'static [&'static str],
}

pub fn rubric_schema() -> Vec<RubricSchemaItem> {
    RubricItem::ALL
        .into_iter()
        .map(|item| RubricSchemaItem {
            item,
            title: item.title(),
            categories: item.categories(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_sets() {
        assert_eq!(RubricItem::ALL.len(), 6);
        assert_eq!(RubricItem::CorrectCode.category_index("no_code"), Some(1));
        assert_eq!(RubricItem::LoAlignment.category_index("unrelated"), Some(2));
        assert_eq!(RubricItem::SufficientInfo.category_index("meh"), None);
        for item in RubricItem::ALL {
            assert!(item.categories().len() >= 2);
            assert_eq!(item.slug().parse::<RubricItem>().unwrap(), item);
        }
    }

    #[test]
    fn judgment_checks() {
        let mut j: BTreeMap<RubricItem, String> = RubricItem::ALL
            .into_iter()
            .map(|i| (i, i.categories()[0].to_string()))
            .collect();
        assert!(check_judgments(&j).is_ok());
        j.insert(RubricItem::UniqueChoices, "pass".into());
        assert!(matches!(
            check_judgments(&j),
            Err(RubricError::UnknownCategory { item: RubricItem::UniqueChoices, .. })
        ));
        j.remove(&RubricItem::CorrectCode);
        j.insert(RubricItem::UniqueChoices, "unique".into());
        assert_eq!(
            check_judgments(&j),
            Err(RubricError::MissingItem(RubricItem::CorrectCode))
        );
    }

    #[test]
    fn json_shape() {
        let a = RubricAnnotation {
            mcq_id: "m".into(),
            rater_id: "r".into(),
            rater_role: RaterRole::Instructor,
            answered_option: OptionLabel::B,
            answered_correctly: false,
            judgments: [(RubricItem::LoAlignment, "aligned".to_string())].into(),
        };
        let v = serde_json::to_value(&a).unwrap();
        assert_eq!(v["raterRole"], "instructor");
        assert_eq!(v["answeredOption"], "B");
        assert_eq!(v["judgments"]["lo_alignment"], "aligned");
    }
}
