use proptest::prelude::*;
use proptest::strategy::ValueTree;
use quizforge_core::eval::{
    fisher_exact_2x2, fisher_exact_2xk, fleiss_kappa, gwet_ac1, resolve, RaterRole,
    ResolutionRule, RubricAnnotation, RubricItem,
};
use quizforge_core::lint::has_stem_fence;
use quizforge_core::parse::to_model_output;
use quizforge_core::store::to_jsonl;
use quizforge_core::template::render;
use quizforge_core::{
    parse_mcq, BloomLevel, Choice, Mcq, McqFilter, McqSource, OptionLabel, ParseContext,
    QuestionType, Store,
};

// Agreement computed from explicit per-rater labels by counting agreeing
// rater pairs, rather than from the count matrix.
fn labels_from_counts(row: &[u32]) -> Vec<usize> {
    row.iter()
        .enumerate()
        .flat_map(|(k, &n)| std::iter::repeat_n(k, n as usize))
        .collect()
}

fn oracle(counts: &[Vec<u32>]) -> (f64, f64) {
    let k = counts[0].len();
    let items: Vec<Vec<usize>> = counts
        .iter()
        .map(|r| labels_from_counts(r))
        .filter(|l| l.len() >= 2)
        .collect();
    let mut pa = 0.0;
    for labels in &items {
        let mut agree = 0usize;
        let mut pairs = 0usize;
        for i in 0..labels.len() {
            for j in 0..labels.len() {
                if i != j {
                    pairs += 1;
                    agree += (labels[i] == labels[j]) as usize;
                }
            }
        }
        pa += agree as f64 / pairs as f64;
    }
    pa /= items.len() as f64;

    let all: Vec<usize> = items.iter().flatten().copied().collect();
    let pe_fleiss: f64 = (0..k)
        .map(|c| {
            let p = all.iter().filter(|&&x| x == c).count() as f64 / all.len() as f64;
            p * p
        })
        .sum();
    let pe_gwet: f64 = (0..k)
        .map(|c| {
            let pi = items
                .iter()
                .map(|l| l.iter().filter(|&&x| x == c).count() as f64 / l.len() as f64)
                .sum::<f64>()
                / items.len() as f64;
            pi * (1.0 - pi)
        })
        .sum::<f64>()
        / (k - 1) as f64;
    let kappa = if pe_fleiss == 1.0 {
        1.0
    } else {
        (pa - pe_fleiss) / (1.0 - pe_fleiss)
    };
    (kappa, (pa - pe_gwet) / (1.0 - pe_gwet))
}

fn rating_matrix() -> impl Strategy<Value = Vec<Vec<u32>>> {
    (2usize..=4, 2u32..=5).prop_flat_map(|(k, raters)| {
        prop::collection::vec(
            prop::collection::vec(0..k, raters as usize).prop_map(move |labels| {
                let mut row = vec![0u32; k];
                for l in labels {
                    row[l] += 1;
                }
                row
            }),
            1..=20,
        )
    })
}

fn ln_choose(n: u64, k: u64) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64).ln() - (i as f64).ln()).sum()
}

fn annotation(
    rater: usize,
    role: RaterRole,
    correct: bool,
    cats: &[usize; 6],
) -> RubricAnnotation {
    RubricAnnotation {
        mcq_id: "m".into(),
        rater_id: format!("r{rater}"),
        rater_role: role,
        answered_option: if correct { OptionLabel::A } else { OptionLabel::B },
        answered_correctly: correct,
        judgments: RubricItem::ALL
            .into_iter()
            .zip(cats)
            .map(|(i, &c)| (i, i.categories()[c % i.categories().len()].to_string()))
            .collect(),
    }
}

fn annotation_set() -> impl Strategy<Value = Vec<RubricAnnotation>> {
    prop::collection::vec(
        (any::<bool>(), any::<bool>(), prop::array::uniform6(0usize..3)),
        1..8,
    )
    .prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (inst, correct, cats))| {
                let role = if inst { RaterRole::Instructor } else { RaterRole::Student };
                annotation(i, role, correct, &cats)
            })
            .collect()
    })
}

/// Strict plurality among `candidates`, or the narrowed tie set.
fn plurality(candidates: &[usize], votes: &[usize]) -> Result<usize, Vec<usize>> {
    let tally: Vec<usize> = candidates
        .iter()
        .map(|c| votes.iter().filter(|v| *v == c).count())
        .collect();
    let top = *tally.iter().max().unwrap();
    if top == 0 {
        return Err(candidates.to_vec());
    }
    let winners: Vec<usize> = candidates
        .iter()
        .zip(&tally)
        .filter(|(_, &n)| n == top)
        .map(|(c, _)| *c)
        .collect();
    if winners.len() == 1 {
        Ok(winners[0])
    } else {
        Err(winners)
    }
}

fn cascade_oracle(item: RubricItem, anns: &[RubricAnnotation]) -> (usize, ResolutionRule) {
    let cat = |a: &RubricAnnotation| item.category_index(&a.judgments[&item]).unwrap();
    let all: Vec<usize> = (0..item.categories().len()).collect();
    let votes: Vec<usize> = anns.iter().map(cat).collect();
    let tied = match plurality(&all, &votes) {
        Ok(c) => return (c, ResolutionRule::Majority),
        Err(t) => t,
    };
    let inst: Vec<usize> = anns
        .iter()
        .filter(|a| a.rater_role == RaterRole::Instructor)
        .map(cat)
        .collect();
    let tied = match plurality(&tied, &inst) {
        Ok(c) => return (c, ResolutionRule::Instructor),
        Err(t) => t,
    };
    let correct: Vec<usize> = anns.iter().filter(|a| a.answered_correctly).map(cat).collect();
    let tied = match plurality(&tied, &correct) {
        Ok(c) => return (c, ResolutionRule::CorrectAnswerer),
        Err(t) => t,
    };
    (*tied.iter().max().unwrap(), ResolutionRule::LeastFavorable)
}

fn mcq_strategy() -> impl Strategy<Value = Mcq> {
    (
        "[a-zA-Z0-9 ?{}\"\\\\]{1,40}",
        prop::array::uniform3("[a-zA-Z0-9 (){}\"]{1,20}"),
        0usize..3,
        any::<bool>(),
        "[a-zA-Z .]{0,30}",
        0usize..5,
    )
        .prop_map(|(stem, choices, key, code, explanation, qt)| {
            let stem = if code {
                format!("Q {stem}\n```python\nx = 1\n```")
            } else {
                format!("Q {stem}")
            };
            Mcq {
                id: format!("id-{}", stem.len()),
                lo_id: "lo".into(),
                question_type: QuestionType::ALL[qt],
                bloom: BloomLevel::Apply,
                source: McqSource::Generated,
                code_in_stem: has_stem_fence(&stem),
                stem,
                choices: OptionLabel::ALL
                    .iter()
                    .zip(choices)
                    .map(|(o, t)| Choice {
                        option: *o,
                        text: t,
                    })
                    .collect(),
                correct_answer: OptionLabel::ALL[key],
                explanation,
                model: "mock".into(),
                created_at: "2026-02-03T04:05:06Z".parse().unwrap(),
            }
        })
}

proptest! {
    #[test]
    fn agreement_matches_pairwise_oracle(m in rating_matrix()) {
        let (k, ac1) = oracle(&m);
        prop_assert!((fleiss_kappa(&m).unwrap() - k).abs() < 1e-9);
        prop_assert!((gwet_ac1(&m).unwrap() - ac1).abs() < 1e-9);
    }

    #[test]
    fn unanimous_rows_give_one(
        rows in prop::collection::vec((0usize..3, 2u32..6), 1..15),
    ) {
        let m: Vec<Vec<u32>> = rows
            .iter()
            .map(|&(c, n)| {
                let mut r = vec![0; 3];
                r[c] = n;
                r
            })
            .collect();
        prop_assert_eq!(fleiss_kappa(&m).unwrap(), 1.0);
        prop_assert_eq!(gwet_ac1(&m).unwrap(), 1.0);
    }

    #[test]
    fn fisher_2x2_matches_enumeration(a in 0u64..12, b in 0u64..12, c in 0u64..12, d in 0u64..12) {
        let (r1, r2, c1, n) = (a + b, c + d, a + c, a + b + c + d);
        prop_assume!(r1 > 0 && r2 > 0 && c1 > 0 && b + d > 0);
        let lp = |x: u64| ln_choose(r1, x) + ln_choose(r2, c1 - x) - ln_choose(n, c1);
        let obs = lp(a);
        let expected: f64 = (c1.saturating_sub(r2)..=r1.min(c1))
            .map(lp)
            .filter(|&l| l <= obs + 1e-7)
            .map(f64::exp)
            .sum();
        let p = fisher_exact_2x2([[a, b], [c, d]]).unwrap();
        prop_assert!((p - expected.min(1.0)).abs() < 1e-9, "{} vs {}", p, expected);
        prop_assert!((fisher_exact_2x2([[c, d], [a, b]]).unwrap() - p).abs() < 1e-12);
        prop_assert!((fisher_exact_2x2([[b, a], [d, c]]).unwrap() - p).abs() < 1e-12);
        prop_assert!(p > 0.0 && p <= 1.0);
    }

    #[test]
    fn resolve_is_permutation_invariant(anns in annotation_set(), seed in any::<u64>()) {
        let base = resolve(&anns).unwrap();
        let mut shuffled = anns.clone();
        // deterministic Fisher-Yates driven by the seed
        let mut s = seed | 1;
        for i in (1..shuffled.len()).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            shuffled.swap(i, (s % (i as u64 + 1)) as usize);
        }
        prop_assert_eq!(resolve(&shuffled).unwrap(), base);
    }

    #[test]
    fn resolve_follows_cascade(anns in annotation_set()) {
        let v = resolve(&anns).unwrap();
        for item in RubricItem::ALL {
            let (cat, rule) = cascade_oracle(item, &anns);
            prop_assert_eq!(v.category(item), item.categories()[cat]);
            prop_assert_eq!(v.resolution_rule[&item], rule);
        }
    }

    #[test]
    fn model_output_round_trip(m in mcq_strategy()) {
        let text = to_model_output(&m);
        let parsed = parse_mcq(&format!("Here you go:\n{text}\n"), &ParseContext::for_mcq(&m)).unwrap();
        prop_assert_eq!(parsed, m);
    }

    #[test]
    fn render_never_rescans_values(v in "[a-z{}]{0,12}") {
        let out = render("[{{a}}]", &[("a", &v)]).unwrap();
        prop_assert_eq!(out, format!("[{v}]"));
    }
}

#[test]
fn monte_carlo_is_seed_deterministic_across_pools() {
    let a = [12, 7, 3, 9];
    let b = [5, 11, 8, 2];
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| fisher_exact_2xk(&a, &b, 40_000, 99).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn store_reserializes_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let mut mcqs = Vec::new();
    for i in 0..40 {
        let mut m = mcq_strategy().new_tree(&mut runner).unwrap().current();
        m.id = format!("m{i}");
        mcqs.push(m);
    }
    store.append_mcqs(&mcqs[..25]).unwrap();
    store.append_mcqs(&mcqs[25..]).unwrap();
    for (i, m) in mcqs.iter().enumerate().take(10) {
        let cats = [i, i + 1, i + 2, i, i + 1, i + 2];
        let mut a = annotation(i, RaterRole::Student, i % 2 == 0, &cats);
        a.mcq_id = m.id.clone();
        store.append_annotation(&a).unwrap();
    }

    let loaded = store.load_mcqs(&McqFilter::default()).unwrap();
    assert_eq!(loaded.iter().map(|s| &s.mcq).collect::<Vec<_>>(), mcqs.iter().collect::<Vec<_>>());
    let on_disk = std::fs::read_to_string(store.path("mcqs.jsonl")).unwrap();
    assert_eq!(to_jsonl(&loaded), on_disk);
    let anns = store.load_annotations(None).unwrap();
    let on_disk = std::fs::read_to_string(store.path("annotations.jsonl")).unwrap();
    assert_eq!(to_jsonl(&anns), on_disk);
}
