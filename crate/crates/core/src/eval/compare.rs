//! Pool comparison: per rubric item, tabulate resolved categories for two
//! MCQ pools and test whether the distributions differ.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::adjudicate::ResolvedVerdict;
use super::fisher::{fisher_exact_2x2, fisher_exact_2xk, FisherError, MIN_ITERATIONS};
use super::rubric::{RaterRole, RubricAnnotation, RubricItem};

pub const DEFAULT_ITERATIONS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TestMethod {
    Exact2x2,
    Mc2xk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ItemComparison {
    pub categories: Vec<String>,
    pub counts_a: Vec<u64>,
    pub counts_b: Vec<u64>,
    pub p_value: f64,
    pub method: TestMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonReport {
    pub pool_a_size: usize,
    pub pool_b_size: usize,
    pub iterations: u64,
    pub seed: u64,
    pub items: BTreeMap<RubricItem, ItemComparison>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error("pool {0} is empty")]
    EmptyPool(char),
    #[error("verdict for {mcq} has no valid category for {item}")]
    BadVerdict { mcq: String, item: RubricItem },
    #[error(transparent)]
    Fisher(#[from] FisherError),
}

fn tabulate(item: RubricItem, pool: &[ResolvedVerdict]) -> Result<Vec<u64>, CompareError> {
    let mut counts = vec![0u64; item.categories().len()];
    for v in pool {
        let idx = v
            .categories
            .get(&item)
            .and_then(|c| item.category_index(c))
            .ok_or_else(|| CompareError::BadVerdict {
                mcq: v.mcq_id.clone(),
                item,
            })?;
        counts[idx] += 1;
    }
    Ok(counts)
}

/// Test one item's two count rows. Categories used by neither pool are
/// dropped first; with one or no categories left the pools cannot differ.
pub fn test_counts(
    counts_a: &[u64],
    counts_b: &[u64],
    iterations: u64,
    seed: u64,
) -> Result<(f64, TestMethod), CompareError> {
    let (a, b): (Vec<u64>, Vec<u64>) = counts_a
        .iter()
        .zip(counts_b)
        .filter(|(x, y)| **x + **y > 0)
        .map(|(x, y)| (*x, *y))
        .unzip();
    match a.len() {
        0 | 1 => Ok((1.0, TestMethod::Exact2x2)),
        2 => Ok((
            fisher_exact_2x2([[a[0], a[1]], [b[0], b[1]]])?,
            TestMethod::Exact2x2,
        )),
        _ => Ok((
            fisher_exact_2xk(&a, &b, iterations, seed)?.p_value,
            TestMethod::Mc2xk,
        )),
    }
}

pub fn compare_pools(
    pool_a: &[ResolvedVerdict],
    pool_b: &[ResolvedVerdict],
    iterations: u64,
    seed: u64,
) -> Result<ComparisonReport, CompareError> {
    // checked even when every item turns out to need only the exact test
    if iterations < MIN_ITERATIONS {
        return Err(FisherError::TooFewIterations(iterations).into());
    }
    if pool_a.is_empty() {
        return Err(CompareError::EmptyPool('A'));
    }
    if pool_b.is_empty() {
        return Err(CompareError::EmptyPool('B'));
    }
    let mut items = BTreeMap::new();
    for item in RubricItem::ALL {
        let counts_a = tabulate(item, pool_a)?;
        let counts_b = tabulate(item, pool_b)?;
        let (p_value, method) = test_counts(&counts_a, &counts_b, iterations, seed)?;
        items.insert(
            item,
            ItemComparison {
                categories: item.categories().iter().map(|c| c.to_string()).collect(),
                counts_a,
                counts_b,
                p_value,
                method,
            },
        );
    }
    Ok(ComparisonReport {
        pool_a_size: pool_a.len(),
        pool_b_size: pool_b.len(),
        iterations,
        seed,
        items,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no annotations match the role filter")]
pub struct NoMatchingAnnotations;

/// Fraction of annotations, optionally restricted to one rater role, whose
/// rater answered correctly.
pub fn answer_rate(
    annotations: &[RubricAnnotation],
    role: Option<RaterRole>,
) -> Result<f64, NoMatchingAnnotations> {
    let (n, correct) = annotations
        .iter()
        .filter(|a| role.is_none_or(|r| a.rater_role == r))
        .fold((0usize, 0usize), |(n, c), a| {
            (n + 1, c + a.answered_correctly as usize)
        });
    if n == 0 {
        return Err(NoMatchingAnnotations);
    }
    Ok(correct as f64 / n as f64)
}
