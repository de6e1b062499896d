use std::collections::BTreeMap;
use std::path::PathBuf;

use quizforge_core::{
    classify_lo, plan_generation, read_course_dir, BloomLevel, Course, PlanSummary, QuestionType,
    Store, TypeMapping, VerbLexicon,
};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/courses")
}

fn courses() -> Vec<Course> {
    read_course_dir(&fixture_dir()).unwrap()
}

#[test]
fn fixture_shape() {
    let courses = courses();
    let shape: BTreeMap<&str, (usize, usize)> = courses
        .iter()
        .map(|c| (c.title.as_str(), (c.modules.len(), c.lo_count())))
        .collect();
    assert_eq!(shape["Practical Programming in Python"], (8, 123));
    assert_eq!(shape["Getting Started with Python"], (5, 55));
    assert_eq!(shape["Python Essentials 1"], (4, 21));
    assert_eq!(shape["Python Essentials 2"], (4, 20));
    assert_eq!(shape["Introduction to Data Science with Python"], (4, 14));
    assert_eq!(shape["Data Engineering with Pandas"], (4, 13));
    assert_eq!(courses.iter().map(Course::lo_count).sum::<usize>(), 246);
}

#[test]
fn fixture_bloom_distribution() {
    let mut counts: BTreeMap<BloomLevel, usize> = BTreeMap::new();
    for c in courses() {
        for (_, lo) in c.los() {
            *counts.entry(lo.bloom.expect("fixture LOs carry a level")).or_default() += 1;
        }
    }
    let expected = [
        (BloomLevel::Remember, 27),
        (BloomLevel::Understand, 66),
        (BloomLevel::Apply, 43),
        (BloomLevel::Analyze, 23),
        (BloomLevel::Evaluate, 3),
        (BloomLevel::Create, 51),
        (BloomLevel::Unassigned, 33),
    ];
    assert_eq!(counts, expected.into_iter().collect());
}

#[test]
fn classifier_recovers_fixture_levels() {
    let lex = VerbLexicon::default_lexicon();
    let mut assigned = 0;
    let mut total = 0;
    for c in courses() {
        for (_, lo) in c.los() {
            let got = classify_lo(&lo.text, &lex);
            assert_eq!(Some(got), lo.bloom, "{}: {}", lo.id, lo.text);
            total += 1;
            assigned += got.is_assigned() as usize;
        }
    }
    assert_eq!(assigned, 213);
    assert!(assigned as f64 / total as f64 >= 0.6);
}

#[test]
fn fixture_plan_totals() {
    let courses = courses();
    let plans = plan_generation(
        courses.iter().flat_map(|c| c.los().map(|(_, lo)| lo)),
        &TypeMapping::default(),
    )
    .unwrap();
    let s = PlanSummary::from_plans(&plans);
    assert_eq!(s.type_total(QuestionType::Recall), 126);
    assert_eq!(s.type_total(QuestionType::FillInTheBlank), 192);
    assert_eq!(s.type_total(QuestionType::ScenarioBased), 99);
    assert_eq!(s.type_total(QuestionType::CorrectOutput), 102);
    assert_eq!(s.type_total(QuestionType::CodeAnalysis), 153);
    assert_eq!(s.total, 672);
}

#[test]
fn import_fixture_courses() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let mut n = 0;
    for entry in std::fs::read_dir(fixture_dir()).unwrap() {
        n += store.import_course(&entry.unwrap().path()).unwrap().lo_count();
    }
    assert_eq!(n, 246);
    let loaded = store.load_courses().unwrap();
    assert_eq!(loaded, courses());
}
