//! `quizforge`: classify learning objectives, plan and generate MCQs, lint
//! them, and compute annotation statistics.
//!
//! Exit codes: 0 success, 1 internal error, 2 user or validation error.

mod cmd;

use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use quizforge_core::eval::compare::DEFAULT_ITERATIONS;
use quizforge_core::McqSource;
use quizforge_pipeline::DEFAULT_CONCURRENCY;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "quizforge", version, about = "Generate, lint and evaluate programming MCQs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
pub struct Global {
    /// Data directory holding courses, MCQs, answers and annotations.
    #[arg(long, global = true, env = "QUIZFORGE_STORE", default_value = "quizforge-data")]
    pub store: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Backend::Mock)]
    pub backend: Backend,
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
    #[arg(long, global = true)]
    pub max_tokens: Option<u32>,
    /// Concurrent generation requests.
    #[arg(long, global = true, default_value_t = DEFAULT_CONCURRENCY)]
    pub concurrency: usize,
    /// Seed for every randomized computation.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo iterations for 2xK significance tests.
    #[arg(long, global = true, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: u64,
    /// JSON object mapping verbs to Bloom levels.
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    /// JSON object mapping Bloom levels to question types.
    #[arg(long, global = true)]
    pub mapping: Option<PathBuf>,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Mock,
    Http,
}

#[derive(Subcommand)]
pub enum Command {
    /// Assign a Bloom level to every learning objective of a course.
    Classify {
        course: PathBuf,
        /// Leave levels already present in the file untouched.
        #[arg(long)]
        keep_existing: bool,
        /// Write the annotated course here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count planned MCQs per question type and Bloom level.
    Plan {
        /// Course files or directories; defaults to the store's courses.
        courses: Vec<PathBuf>,
    },
    /// Generate MCQs and append them to the store.
    Generate {
        /// Course files or directories; defaults to the store's courses.
        courses: Vec<PathBuf>,
        /// Only generate for this learning objective.
        #[arg(long)]
        lo_id: Option<String>,
        #[arg(long)]
        run_id: Option<String>,
        /// Directory overriding the bundled prompt resources.
        #[arg(long)]
        resources: Option<PathBuf>,
        /// Fixed creation timestamp (RFC 3339) for reproducible output.
        #[arg(long)]
        created_at: Option<DateTime<Utc>>,
    },
    /// Lint MCQs from a JSONL file, or the store's MCQs. Records without
    /// source, model or creation time are linted as human-authored.
    Lint { file: Option<PathBuf> },
    /// Inter-rater agreement per rubric item.
    Stats {
        /// Annotation JSONL file; defaults to the store's annotations.
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// Significance tests on resolved verdicts of two MCQ pools.
    Compare {
        #[arg(long, default_value = "generated", value_parser = parse_source)]
        pool_a: McqSource,
        #[arg(long, default_value = "human", value_parser = parse_source)]
        pool_b: McqSource,
    },
    /// Run the annotation API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Directory with the review UI's static files.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
    /// Import data into the store.
    #[command(subcommand)]
    Import(Import),
}

#[derive(Subcommand)]
pub enum Import {
    /// Course JSON files.
    Course {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Human-authored MCQs as JSONL.
    Human { file: PathBuf },
    /// Rubric annotations as JSONL.
    Annotations { file: PathBuf },
}

fn parse_source(s: &str) -> Result<McqSource, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::from(1);
        }
    };
    match runtime.block_on(cmd::run(&cli.global, cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
