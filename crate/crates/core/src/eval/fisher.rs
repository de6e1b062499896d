//! Fisher's exact test for 2x2 tables and a seeded Monte Carlo version for
//! 2xK tables.
//!
//! Both use the same two-sided rule: the p-value is the total probability,
//! under fixed margins, of tables no more likely than the observed one. A
//! relative slack of 1e-7 absorbs floating-point noise when comparing
//! probabilities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Hypergeometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const RELATIVE_SLACK: f64 = 1e-7;
pub const MIN_ITERATIONS: u64 = 10_000;
/// Iterations per independently seeded stream.
const CHUNK: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FisherError {
    #[error("table has an empty row or column")]
    DegenerateMargins,
    #[error("a 2xK table needs at least two columns, got {0}")]
    TooFewColumns(usize),
    #[error("rows have different lengths ({0} and {1})")]
    RowLengthMismatch(usize, usize),
    #[error("at least {MIN_ITERATIONS} iterations required, got {0}")]
    TooFewIterations(u64),
}

/// `ln(n!)` for `n` up to a fixed size.
struct LnFactorial(Vec<f64>);

impl LnFactorial {
    fn new(max: u64) -> Self {
        let mut t = Vec::with_capacity(max as usize + 1);
        t.push(0.0);
        let mut acc = 0.0;
        for i in 1..=max {
            acc += (i as f64).ln();
            t.push(acc);
        }
        LnFactorial(t)
    }

    fn choose(&self, n: u64, k: u64) -> f64 {
        self.0[n as usize] - self.0[k as usize] - self.0[(n - k) as usize]
    }
}

/// Two-sided p-value of Fisher's exact test on `[[a, b], [c, d]]`.
pub fn fisher_exact_2x2(table: [[u64; 2]; 2]) -> Result<f64, FisherError> {
    let [[a, b], [c, d]] = table;
    let (r1, r2) = (a + b, c + d);
    let (c1, c2) = (a + c, b + d);
    if r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0 {
        return Err(FisherError::DegenerateMargins);
    }
    let n = r1 + r2;
    let lf = LnFactorial::new(n);
    let ln_p = |x: u64| lf.choose(r1, x) + lf.choose(r2, c1 - x) - lf.choose(n, c1);

    let cutoff = ln_p(a) + RELATIVE_SLACK.ln_1p();
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let included: Vec<f64> = (lo..=hi).map(ln_p).filter(|&lp| lp <= cutoff).collect();
    // every table counted: the sum is exactly 1, skip the rounding
    if included.len() as u64 == hi - lo + 1 {
        return Ok(1.0);
    }
    let p: f64 = included.into_iter().map(f64::exp).sum();
    Ok(p.min(1.0))
}

/// Result of the Monte Carlo test, with what is needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MonteCarloP {
    pub p_value: f64,
    /// Sampled tables at most as likely as the observed one.
    pub hits: u64,
    pub iterations: u64,
    pub seed: u64,
}

impl MonteCarloP {
    /// Binomial standard error of the estimate.
    pub fn std_error(&self) -> f64 {
        (self.p_value * (1.0 - self.p_value) / self.iterations as f64).sqrt()
    }
}

/// Monte Carlo Fisher test on a 2xK table given as its two rows.
///
/// Each iteration draws the first row of a random table with the observed
/// margins (sequential hypergeometric draws, which is exact sampling from
/// the multivariate hypergeometric law) and counts it when its probability
/// does not exceed the observed table's. The estimate is
/// `(hits + 1) / (iterations + 1)`, counting the observed table itself.
///
/// Iterations are split into fixed chunks, each with its own ChaCha stream
/// derived from `seed`, so the result does not depend on thread count.
pub fn fisher_exact_2xk(
    row_a: &[u64],
    row_b: &[u64],
    iterations: u64,
    seed: u64,
) -> Result<MonteCarloP, FisherError> {
    if row_a.len() != row_b.len() {
        return Err(FisherError::RowLengthMismatch(row_a.len(), row_b.len()));
    }
    if row_a.len() < 2 {
        return Err(FisherError::TooFewColumns(row_a.len()));
    }
    if iterations < MIN_ITERATIONS {
        return Err(FisherError::TooFewIterations(iterations));
    }
    let cols: Vec<u64> = row_a.iter().zip(row_b).map(|(a, b)| a + b).collect();
    let r1: u64 = row_a.iter().sum();
    let r2: u64 = row_b.iter().sum();
    if r1 == 0 || r2 == 0 || cols.contains(&0) {
        return Err(FisherError::DegenerateMargins);
    }
    let n = r1 + r2;
    let lf = LnFactorial::new(n);
    // ln C(n, r1) is shared by every table with these margins
    let ln_weight = |first_row: &[u64]| -> f64 {
        first_row
            .iter()
            .zip(&cols)
            .map(|(&x, &c)| lf.choose(c, x))
            .sum()
    };
    let cutoff = ln_weight(row_a) + RELATIVE_SLACK.ln_1p();

    let chunks = iterations.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let todo = CHUNK.min(iterations - chunk * CHUNK);
            let mut sample = vec![0u64; cols.len()];
            let mut hits = 0u64;
            for _ in 0..todo {
                let mut pop_left = n;
                let mut draws_left = r1;
                let last = cols.len() - 1;
                for (k, &c) in cols.iter().enumerate() {
                    let x = if k == last {
                        draws_left
                    } else if draws_left == 0 {
                        0
                    } else {
                        Hypergeometric::new(pop_left, c, draws_left)
                            .expect("parameters within population")
                            .sample(&mut rng)
                    };
                    sample[k] = x;
                    pop_left -= c;
                    draws_left -= x;
                }
                if ln_weight(&sample) <= cutoff {
                    hits += 1;
                }
            }
            hits
        })
        .sum();

    Ok(MonteCarloP {
        p_value: (hits + 1) as f64 / (iterations + 1) as f64,
        hits,
        iterations,
        seed,
    })
}
