//! Rubric annotations, disagreement resolution, agreement statistics and
//! pool comparison.

pub mod adjudicate;
pub mod agreement;
pub mod compare;
pub mod fisher;
pub mod rubric;

pub use adjudicate::{resolve, resolve_all, ResolutionRule, ResolveError, ResolvedVerdict};
pub use agreement::{agreement_report, fleiss_kappa, gwet_ac1, AgreementError, AgreementReport, ItemAgreement};
pub use compare::{answer_rate, compare_pools, CompareError, ComparisonReport, ItemComparison, NoMatchingAnnotations, TestMethod};
pub use fisher::{fisher_exact_2x2, fisher_exact_2xk, FisherError, MonteCarloP};
pub use rubric::{rubric_schema, RaterRole, RubricAnnotation, RubricError, RubricItem, RubricSchemaItem};
