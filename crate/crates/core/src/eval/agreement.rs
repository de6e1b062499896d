//! Fleiss' kappa and Gwet's AC1 over per-item category counts.
//!
//! Input is one row per rated item, one column per category; cell `(i, k)`
//! is the number of raters who put item `i` in category `k`. Rows may have
//! different totals. Items with fewer than two ratings carry no agreement
//! information and are skipped.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rubric::{RubricAnnotation, RubricError, RubricItem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgreementError {
    #[error("no item has at least two ratings")]
    NoEligibleItems,
    #[error("need at least two categories, got {0}")]
    TooFewCategories(usize),
    #[error("row {row} has {got} categories, expected {expected}")]
    RaggedRows {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("annotation by {rater} on {mcq} is invalid: {source}")]
    InvalidAnnotation {
        rater: String,
        mcq: String,
        source: RubricError,
    },
}

fn eligible_rows(counts: &[Vec<u32>]) -> Result<(usize, Vec<&[u32]>), AgreementError> {
    let k = counts.first().map(Vec::len).unwrap_or(0);
    for (row, r) in counts.iter().enumerate() {
        if r.len() != k {
            return Err(AgreementError::RaggedRows {
                row,
                got: r.len(),
                expected: k,
            });
        }
    }
    let rows: Vec<&[u32]> = counts
        .iter()
        .map(Vec::as_slice)
        .filter(|r| r.iter().sum::<u32>() >= 2)
        .collect();
    if rows.is_empty() {
        return Err(AgreementError::NoEligibleItems);
    }
    if k < 2 {
        return Err(AgreementError::TooFewCategories(k));
    }
    Ok((k, rows))
}

/// Mean per-item observed agreement.
fn observed_agreement(rows: &[&[u32]]) -> f64 {
    let sum: f64 = rows
        .iter()
        .map(|r| {
            let n = r.iter().sum::<u32>() as f64;
            let pairs: f64 = r.iter().map(|&c| c as f64 * (c as f64 - 1.0)).sum();
            pairs / (n * (n - 1.0))
        })
        .sum();
    sum / rows.len() as f64
}

pub fn fleiss_kappa(counts: &[Vec<u32>]) -> Result<f64, AgreementError> {
    let (k, rows) = eligible_rows(counts)?;
    let p_a = observed_agreement(&rows);
    let total: f64 = rows.iter().flat_map(|r| r.iter()).map(|&c| c as f64).sum();
    let p_e: f64 = (0..k)
        .map(|j| {
            let pj = rows.iter().map(|r| r[j] as f64).sum::<f64>() / total;
            pj * pj
        })
        .sum();
    if p_e >= 1.0 {
        // a single category used throughout; p_a is 1 as well
        return Ok(1.0);
    }
    Ok((p_a - p_e) / (1.0 - p_e))
}

pub fn gwet_ac1(counts: &[Vec<u32>]) -> Result<f64, AgreementError> {
    let (k, rows) = eligible_rows(counts)?;
    let p_a = observed_agreement(&rows);
    let n_items = rows.len() as f64;
    let p_e: f64 = (0..k)
        .map(|j| {
            let pi = rows
                .iter()
                .map(|r| r[j] as f64 / r.iter().sum::<u32>() as f64)
                .sum::<f64>()
                / n_items;
            pi * (1.0 - pi)
        })
        .sum::<f64>()
        / (k as f64 - 1.0);
    Ok((p_a - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ItemAgreement {
    pub fleiss_kappa: f64,
    pub gwet_ac1: f64,
    /// MCQs with at least two annotations.
    pub n_items: usize,
    /// Annotations on those MCQs.
    pub n_annotations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub items: BTreeMap<RubricItem, ItemAgreement>,
}

/// Category-count matrix for one rubric item, one row per MCQ (sorted by id).
pub fn rating_matrix(
    item: RubricItem,
    annotations: &[RubricAnnotation],
) -> Result<Vec<Vec<u32>>, AgreementError> {
    let k = item.categories().len();
    let mut rows: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
    for a in annotations {
        a.check().map_err(|source| AgreementError::InvalidAnnotation {
            rater: a.rater_id.clone(),
            mcq: a.mcq_id.clone(),
            source,
        })?;
        let cat = a.category(item).expect("checked");
        rows.entry(&a.mcq_id).or_insert_with(|| vec![0; k])[cat] += 1;
    }
    Ok(rows.into_values().collect())
}

pub fn agreement_report(annotations: &[RubricAnnotation]) -> Result<AgreementReport, AgreementError> {
    let mut items = BTreeMap::new();
    for item in RubricItem::ALL {
        let matrix = rating_matrix(item, annotations)?;
        let eligible: Vec<&Vec<u32>> = matrix
            .iter()
            .filter(|r| r.iter().sum::<u32>() >= 2)
            .collect();
        items.insert(
            item,
            ItemAgreement {
                fleiss_kappa: fleiss_kappa(&matrix)?,
                gwet_ac1: gwet_ac1(&matrix)?,
                n_items: eligible.len(),
                n_annotations: eligible
                    .iter()
                    .map(|r| r.iter().sum::<u32>() as usize)
                    .sum(),
            },
        );
    }
    Ok(AgreementReport { items })
}
