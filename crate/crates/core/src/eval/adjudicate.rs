//! Disagreement resolution.
//!
//! For each rubric item the verdict is decided by the first rule that yields
//! a single category:
//!
//! 1. strict plurality over all annotations;
//! 2. strict plurality over instructor annotations;
//! 3. strict plurality over annotations from raters who answered correctly;
//! 4. the least favorable category still in contention.
//!
//! Rules 2 and 3 only count votes for categories still tied after the
//! previous rule. A rule that sees no such votes leaves the tie as it is.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rubric::{RaterRole, RubricAnnotation, RubricError, RubricItem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionRule {
    Majority,
    Instructor,
    CorrectAnswerer,
    LeastFavorable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResolvedVerdict {
    pub mcq_id: String,
    pub categories: BTreeMap<RubricItem, String>,
    pub resolution_rule: BTreeMap<RubricItem, ResolutionRule>,
}

impl ResolvedVerdict {
    pub fn category(&self, item: RubricItem) -> &str {
        &self.categories[&item]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("no annotations to resolve")]
    EmptyAnnotationSet,
    #[error("annotations refer to different MCQs ({0} and {1})")]
    MixedMcqIds(String, String),
    #[error("annotation by {rater} is invalid: {source}")]
    InvalidAnnotation { rater: String, source: RubricError },
}

/// Candidates among `tied` with the most votes. Returns `tied` unchanged
/// when none of the votes land on a tied category.
fn narrow(tied: &[usize], votes: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut counts: BTreeMap<usize, usize> = tied.iter().map(|&c| (c, 0)).collect();
    for v in votes {
        if let Some(n) = counts.get_mut(&v) {
            *n += 1;
        }
    }
    let best = counts.values().copied().max().unwrap_or(0);
    if best == 0 {
        return tied.to_vec();
    }
    counts
        .into_iter()
        .filter(|&(_, n)| n == best)
        .map(|(c, _)| c)
        .collect()
}

fn resolve_item(item: RubricItem, annotations: &[RubricAnnotation]) -> (usize, ResolutionRule) {
    let cat = |a: &RubricAnnotation| a.category(item).expect("checked");
    let all: Vec<usize> = (0..item.categories().len()).collect();

    let tied = narrow(&all, annotations.iter().map(cat));
    if let [only] = tied[..] {
        return (only, ResolutionRule::Majority);
    }
    let tied = narrow(
        &tied,
        annotations
            .iter()
            .filter(|a| a.rater_role == RaterRole::Instructor)
            .map(cat),
    );
    if let [only] = tied[..] {
        return (only, ResolutionRule::Instructor);
    }
    let tied = narrow(
        &tied,
        annotations.iter().filter(|a| a.answered_correctly).map(cat),
    );
    if let [only] = tied[..] {
        return (only, ResolutionRule::CorrectAnswerer);
    }
    let worst = *tied.iter().max().expect("tie set is never empty");
    (worst, ResolutionRule::LeastFavorable)
}

/// Resolve all annotations of one MCQ into a single verdict.
pub fn resolve(annotations: &[RubricAnnotation]) -> Result<ResolvedVerdict, ResolveError> {
    let first = annotations.first().ok_or(ResolveError::EmptyAnnotationSet)?;
    for a in annotations {
        if a.mcq_id != first.mcq_id {
            return Err(ResolveError::MixedMcqIds(
                first.mcq_id.clone(),
                a.mcq_id.clone(),
            ));
        }
        a.check().map_err(|source| ResolveError::InvalidAnnotation {
            rater: a.rater_id.clone(),
            source,
        })?;
    }
    let mut categories = BTreeMap::new();
    let mut resolution_rule = BTreeMap::new();
    for item in RubricItem::ALL {
        let (idx, rule) = resolve_item(item, annotations);
        categories.insert(item, item.categories()[idx].to_string());
        resolution_rule.insert(item, rule);
    }
    Ok(ResolvedVerdict {
        mcq_id: first.mcq_id.clone(),
        categories,
        resolution_rule,
    })
}

/// Group annotations by MCQ id and resolve each group.
pub fn resolve_all(
    annotations: &[RubricAnnotation],
) -> Result<BTreeMap<String, ResolvedVerdict>, ResolveError> {
    let mut groups: BTreeMap<&str, Vec<RubricAnnotation>> = BTreeMap::new();
    for a in annotations {
        groups.entry(&a.mcq_id).or_default().push(a.clone());
    }
    groups
        .into_iter()
        .map(|(id, group)| Ok((id.to_string(), resolve(&group)?)))
        .collect()
}
