use std::collections::BTreeMap;
use std::fmt::{Display, Write as _};
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use quizforge_core::eval::{agreement_report, compare_pools, resolve_all, ComparisonReport, RubricAnnotation};
use quizforge_core::qtype::TypeMapping;
use quizforge_core::store::{read_lines, MCQS_FILE};
use quizforge_core::{
    classify_lo, lint_mcq, load_lexicon, plan_generation, read_course, read_course_dir, validate_mcq,
    BloomLevel, Course, DesignResources, GenerationParams, LintFinding, McqFilter, McqSource,
    PlanSummary, RawMcq, Severity, Store, StoreError, VerbLexicon,
};
use quizforge_llm::{ChatBackend, HttpBackend, MockBackend, API_BASE_ENV, API_KEY_ENV};
use quizforge_pipeline::{BatchOptions, FixedClock, GenerationRun, Pipeline, PipelineError};
use quizforge_server::{serve, AppState};
use serde::Serialize;
use thiserror::Error;

use crate::{Backend, Command, Global, Import};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

fn usage(e: impl Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn internal(e: impl Display) -> CliError {
    CliError::Internal(e.to_string())
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match &e {
            StoreError::Io { source, .. } if source.kind() != std::io::ErrorKind::NotFound => internal(e),
            _ => usage(e),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Store(e) => e.into(),
            e => usage(e),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn emit<T: Serialize>(g: &Global, value: &T, text: impl FnOnce(&T) -> String) -> CliResult {
    let out = if g.json {
        serde_json::to_string_pretty(value).map_err(internal)? + "\n"
    } else {
        text(value)
    };
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(out.as_bytes()).and_then(|()| stdout.flush()) {
        // a closed pipe (`| head`) is not a failure
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(internal(e)),
        _ => Ok(()),
    }
}

pub async fn run(g: &Global, command: Command) -> CliResult {
    match command {
        Command::Classify {
            course,
            keep_existing,
            out,
        } => classify(g, &course, keep_existing, out.as_deref()),
        Command::Plan { courses } => plan(g, &courses),
        Command::Generate {
            courses,
            lo_id,
            run_id,
            resources,
            created_at,
        } => {
            let mut pipeline = Pipeline::new(backend(g)?)
                .with_mapping(mapping(g)?)
                .with_lexicon(Some(lexicon(g)?))
                .with_params(params(g)?);
            if let Some(id) = run_id {
                pipeline = pipeline.with_run_id(id);
            }
            if let Some(dir) = resources {
                pipeline = pipeline.with_resources(DesignResources::load(&dir).map_err(usage)?);
            }
            if let Some(t) = created_at {
                pipeline = pipeline.with_clock(Arc::new(FixedClock(t)));
            }
            generate(g, &pipeline, &courses, lo_id).await
        }
        Command::Lint { file } => lint(g, file),
        Command::Stats { annotations } => stats(g, annotations.as_deref()),
        Command::Compare { pool_a, pool_b } => compare(g, pool_a, pool_b),
        Command::Serve {
            port,
            host,
            static_dir,
        } => {
            let mut state = AppState::new(open_store(g)?);
            state.seed = g.seed;
            state.iterations = g.iterations;
            let addr = SocketAddr::new(host, port);
            eprintln!("serving {} on http://{addr}", g.store.display());
            serve(addr, state, static_dir).await.map_err(internal)
        }
        Command::Import(what) => import(g, what),
    }
}

fn open_store(g: &Global) -> CliResult<Store> {
    Ok(Store::open(&g.store)?)
}

fn lexicon(g: &Global) -> CliResult<VerbLexicon> {
    match &g.lexicon {
        Some(p) => load_lexicon(p).map_err(usage),
        None => Ok(VerbLexicon::default_lexicon()),
    }
}

fn mapping(g: &Global) -> CliResult<TypeMapping> {
    match &g.mapping {
        Some(p) => TypeMapping::load(p).map_err(usage),
        None => Ok(TypeMapping::default()),
    }
}

fn params(g: &Global) -> CliResult<GenerationParams> {
    let mut p = GenerationParams::default();
    if let Some(m) = &g.model {
        p.model = m.clone();
    }
    if let Some(t) = g.temperature {
        p.temperature = t;
    }
    if let Some(n) = g.max_tokens {
        p.max_tokens = n;
    }
    p.check().map_err(usage)?;
    Ok(p)
}

fn backend(g: &Global) -> CliResult<Arc<dyn ChatBackend>> {
    Ok(match g.backend {
        Backend::Mock => Arc::new(MockBackend),
        Backend::Http => {
            let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.trim().is_empty());
            let base = std::env::var(API_BASE_ENV).ok().filter(|b| !b.trim().is_empty());
            Arc::new(HttpBackend::from_env_values(key, base).map_err(usage)?)
        }
    })
}

/// Course files and directories in argument order, or the store's courses.
fn load_courses(g: &Global, paths: &[PathBuf]) -> CliResult<Vec<Course>> {
    if paths.is_empty() {
        let courses = open_store(g)?.load_courses()?;
        if courses.is_empty() {
            return Err(usage("no course given and none imported into the store"));
        }
        return Ok(courses);
    }
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            out.extend(read_course_dir(p)?);
        } else {
            out.push(read_course(p)?);
        }
    }
    Ok(out)
}

fn level_counts<'a>(levels: impl Iterator<Item = BloomLevel> + 'a) -> BTreeMap<BloomLevel, usize> {
    let mut counts: BTreeMap<BloomLevel, usize> = BloomLevel::ALL.into_iter().map(|l| (l, 0)).collect();
    for l in levels {
        *counts.entry(l).or_default() += 1;
    }
    counts
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ClassifyReport {
    title: String,
    counts: BTreeMap<BloomLevel, usize>,
    levels: BTreeMap<String, BloomLevel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    written: Option<PathBuf>,
}

fn classify(g: &Global, path: &Path, keep_existing: bool, out: Option<&Path>) -> CliResult {
    let lex = lexicon(g)?;
    let mut course = read_course(path)?;
    for m in &mut course.modules {
        for lo in &mut m.los {
            if !(keep_existing && lo.bloom.is_some()) {
                lo.bloom = Some(classify_lo(&lo.text, &lex));
            }
        }
    }
    let levels: BTreeMap<String, BloomLevel> = course
        .los()
        .map(|(_, lo)| (lo.id.clone(), lo.bloom.unwrap_or(BloomLevel::Unassigned)))
        .collect();
    if let Some(out) = out {
        let text = serde_json::to_string_pretty(&course).map_err(internal)?;
        std::fs::write(out, text + "\n").map_err(|e| usage(format!("{}: {e}", out.display())))?;
    }
    let report = ClassifyReport {
        title: course.title.clone(),
        counts: level_counts(levels.values().copied()),
        levels,
        written: out.map(Path::to_path_buf),
    };
    emit(g, &report, |r| {
        let mut s = format!("{}\n", r.title);
        for (level, n) in &r.counts {
            let _ = writeln!(s, "  {:<12} {n:>4}", level.as_str());
        }
        let _ = writeln!(s, "  {:<12} {:>4}", "total", r.levels.len());
        if let Some(p) = &r.written {
            let _ = writeln!(s, "wrote {}", p.display());
        }
        s
    })
}

fn plan(g: &Global, paths: &[PathBuf]) -> CliResult {
    let lex = lexicon(g)?;
    let mapping = mapping(g)?;
    let mut los = Vec::new();
    for course in load_courses(g, paths)? {
        for (_, lo) in course.los() {
            let mut lo = lo.clone();
            lo.bloom.get_or_insert_with(|| classify_lo(&lo.text, &lex));
            los.push(lo);
        }
    }
    let plans = plan_generation(&los, &mapping).map_err(usage)?;
    let summary = PlanSummary::from_plans(&plans);
    emit(g, &summary, plan_table)
}

fn plan_table(s: &PlanSummary) -> String {
    let mut out = format!("{:<20}", "type");
    for l in BloomLevel::ALL {
        let _ = write!(out, "{:>6}", l.abbrev());
    }
    out.push_str("  total\n");
    for (t, total) in &s.by_type {
        let _ = write!(out, "{:<20}", t.display_name());
        for l in BloomLevel::ALL {
            let n = s.cells.get(t).and_then(|c| c.get(&l)).copied().unwrap_or(0);
            let _ = write!(out, "{n:>6}");
        }
        let _ = writeln!(out, "  {total:>5}");
    }
    let _ = write!(out, "{:<20}", "LOs");
    for l in BloomLevel::ALL {
        let _ = write!(out, "{:>6}", s.by_level.get(&l).copied().unwrap_or(0));
    }
    let _ = writeln!(out, "  {:>5}", s.lo_count);
    let _ = writeln!(out, "planned MCQs: {}", s.total);
    out
}

async fn generate(g: &Global, pipeline: &Pipeline, paths: &[PathBuf], lo_id: Option<String>) -> CliResult {
    let courses = load_courses(g, paths)?;
    let store = open_store(g)?;
    let run = pipeline
        .generate_batch(
            &courses,
            &store,
            &BatchOptions {
                concurrency: g.concurrency,
                lo_id,
            },
        )
        .await?;
    emit(g, &run, |r: &GenerationRun| {
        let mut s = format!(
            "run {}: planned {}, produced {}, failed attempts {}, requests {}\n",
            r.run_id, r.planned, r.produced, r.failed, r.attempts
        );
        for f in &r.failures {
            let _ = writeln!(
                s,
                "  {} {} attempt {}: {:?}: {}",
                f.lo_id,
                f.question_type.slug(),
                f.attempt,
                f.kind,
                f.detail
            );
        }
        let _ = writeln!(s, "stored in {}", store.path(MCQS_FILE).display());
        s
    })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct LintRow {
    line: usize,
    id: String,
    #[serde(flatten)]
    finding: LintFinding,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct InvalidRow {
    line: usize,
    id: Option<String>,
    error: String,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct LintReport {
    records: usize,
    clean: usize,
    findings: Vec<LintRow>,
    invalid: Vec<InvalidRow>,
}

fn lint(g: &Global, file: Option<PathBuf>) -> CliResult {
    let path = match file {
        Some(p) => p,
        None => open_store(g)?.path(MCQS_FILE),
    };
    if !path.exists() {
        return Err(usage(format!("{}: no such file", path.display())));
    }
    let mut report = LintReport {
        records: 0,
        clean: 0,
        findings: Vec::new(),
        invalid: Vec::new(),
    };
    let now = chrono::Utc::now();
    for (line, mut raw) in read_lines::<RawMcq>(&path)? {
        report.records += 1;
        raw.fill_missing_provenance(now);
        match validate_mcq(&raw) {
            Ok(m) => {
                let found = lint_mcq(&m);
                if found.is_empty() {
                    report.clean += 1;
                }
                report.findings.extend(found.into_iter().map(|finding| LintRow {
                    line,
                    id: m.id.clone(),
                    finding,
                }));
            }
            Err(e) => report.invalid.push(InvalidRow {
                line,
                id: raw.id.clone(),
                error: e.to_string(),
            }),
        }
    }
    emit(g, &report, |r| {
        let mut s = String::new();
        for f in &r.findings {
            let sev = match f.finding.severity {
                Severity::Warning => "warning",
                Severity::Error => "error",
            };
            let _ = writeln!(s, "{}:{} {} {sev} {:?}: {}", path.display(), f.line, f.id, f.finding.code, f.finding.detail);
        }
        for i in &r.invalid {
            let _ = writeln!(s, "{}:{} invalid: {}", path.display(), i.line, i.error);
        }
        let _ = writeln!(
            s,
            "{} records, {} clean, {} findings, {} invalid",
            r.records,
            r.clean,
            r.findings.len(),
            r.invalid.len()
        );
        s
    })?;
    if !report.invalid.is_empty() {
        return Err(usage(format!("{} invalid records", report.invalid.len())));
    }
    Ok(())
}

fn load_annotations(g: &Global, file: Option<&Path>) -> CliResult<Vec<RubricAnnotation>> {
    match file {
        Some(p) => {
            if !p.exists() {
                return Err(usage(format!("{}: no such file", p.display())));
            }
            Ok(read_lines(p)?.into_iter().map(|(_, a)| a).collect())
        }
        None => Ok(open_store(g)?.load_annotations(None)?),
    }
}

fn stats(g: &Global, file: Option<&Path>) -> CliResult {
    let anns = load_annotations(g, file)?;
    let report = agreement_report(&anns).map_err(usage)?;
    emit(g, &report, |r| {
        let mut s = format!("{:<20}{:>8}{:>10}{:>10}\n", "item", "items", "kappa", "AC1");
        for (item, a) in &r.items {
            let _ = writeln!(
                s,
                "{:<20}{:>8}{:>10.3}{:>10.3}",
                item.slug(),
                a.n_items,
                a.fleiss_kappa,
                a.gwet_ac1
            );
        }
        s
    })
}

fn compare(g: &Global, pool_a: McqSource, pool_b: McqSource) -> CliResult {
    let store = open_store(g)?;
    let sources: BTreeMap<String, McqSource> = store
        .load_mcqs(&McqFilter::default())?
        .into_iter()
        .map(|m| (m.mcq.id, m.mcq.source))
        .collect();
    let verdicts = resolve_all(&store.load_annotations(None)?).map_err(usage)?;
    let pick = |src: McqSource| -> Vec<_> {
        verdicts
            .values()
            .filter(|v| sources.get(&v.mcq_id) == Some(&src))
            .cloned()
            .collect()
    };
    let report = compare_pools(&pick(pool_a), &pick(pool_b), g.iterations, g.seed).map_err(usage)?;
    emit(g, &report, |r: &ComparisonReport| {
        let mut s = format!(
            "pool A: {} ({} MCQs), pool B: {} ({} MCQs), seed {}, iterations {}\n",
            pool_a.as_str(),
            r.pool_a_size,
            pool_b.as_str(),
            r.pool_b_size,
            r.seed,
            r.iterations
        );
        for (item, c) in &r.items {
            let _ = writeln!(s, "{}: p = {:.3e} ({:?})", item.slug(), c.p_value, c.method);
            for (i, cat) in c.categories.iter().enumerate() {
                let _ = writeln!(s, "  {cat:<24}{:>6}{:>6}", c.counts_a[i], c.counts_b[i]);
            }
        }
        s
    })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ImportReport {
    kind: &'static str,
    imported: usize,
    details: Vec<String>,
}

fn import(g: &Global, what: Import) -> CliResult {
    let store = open_store(g)?;
    let report = match what {
        Import::Course { files } => {
            let mut details = Vec::new();
            for f in &files {
                let c = store.import_course(f)?;
                details.push(format!("{} ({} LOs)", c.title, c.lo_count()));
            }
            ImportReport {
                kind: "course",
                imported: details.len(),
                details,
            }
        }
        Import::Human { file } => {
            let stored = store.import_human_mcqs(&file, chrono::Utc::now())?;
            let flagged: Vec<String> = stored
                .iter()
                .filter(|m| !m.lints.is_empty())
                .map(|m| format!("{}: {} lint findings", m.mcq.id, m.lints.len()))
                .collect();
            ImportReport {
                kind: "human",
                imported: stored.len(),
                details: flagged,
            }
        }
        Import::Annotations { file } => {
            let anns: Vec<RubricAnnotation> = read_lines(&file)?.into_iter().map(|(_, a)| a).collect();
            for a in &anns {
                store.append_annotation(a)?;
            }
            ImportReport {
                kind: "annotations",
                imported: anns.len(),
                details: Vec::new(),
            }
        }
    };
    emit(g, &report, |r| {
        let mut s = format!("imported {} {} record(s) into {}\n", r.imported, r.kind, store.root().display());
        for d in &r.details {
            let _ = writeln!(s, "  {d}");
        }
        s
    })
}
