//! Command-line front end.
//!
//! Exit codes: 0 when validation passes, 1 when the record carries
//! error-severity issues, 2 when the pipeline could not produce a record or
//! an input could not be read.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::chunker::{chunk_text_by_tokens, WordTokenizer};
use crate::config::{BackendKind, PipelineConfig};
use crate::extraction::{ExtractionBackend, HttpBackend, MockBackend};
use crate::ingest::load_markdown;
use crate::metrics::{compute_metrics, WeightVector};
use crate::pipeline::{run_process, sibling_path, PipelineError};
use crate::schema::parse_record_str;
use crate::validation::validate_all;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "batchrec", version, about = "Convert batch manufacturing record markdown into validated JSON")]
pub struct Cli {
    /// Log verbosity (repeat for more)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chunk, extract, merge, validate and score a markdown record
    Process {
        input: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Print the chunks the extractor would see
    Chunk {
        input: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Run the validation layers over a record JSON file
    Validate {
        record: PathBuf,
        /// Also write the report here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a record against its source markdown
    Score {
        source: PathBuf,
        record: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BackendArg {
    Http,
    Mock,
}

/// Flags that override keys of the JSON config.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// JSON config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Record output path (chunk: JSON array output path)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Metrics report output path
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Shorthand for --backend mock
    #[arg(long)]
    pub mock: bool,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub max_tokens: Option<usize>,
    #[arg(long)]
    pub hard_split_threshold: Option<usize>,
    /// Upper bound on concurrent extractions
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub max_attempts: Option<u32>,
    /// Re-extract chunks whose crude coverage falls below this percentage
    #[arg(long)]
    pub reprocess_threshold: Option<f64>,
    /// Ten comma-separated weights, or name=value pairs
    #[arg(long)]
    pub weights: Option<WeightVector>,
}

impl Overrides {
    pub fn resolve(&self) -> Result<PipelineConfig, String> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p).map_err(|e| e.to_string())?,
            None => PipelineConfig::default(),
        };
        if let Some(b) = self.backend {
            cfg.backend.kind = match b {
                BackendArg::Http => BackendKind::Http,
                BackendArg::Mock => BackendKind::Mock,
            };
        }
        if self.mock {
            cfg.backend.kind = BackendKind::Mock;
        }
        if let Some(e) = &self.endpoint {
            cfg.backend.endpoint = e.clone();
        }
        if let Some(m) = &self.model {
            cfg.backend.model = m.clone();
        }
        if let Some(v) = self.max_tokens {
            cfg.max_tokens = v;
        }
        if let Some(v) = self.hard_split_threshold {
            cfg.hard_split_threshold = v;
        }
        if let Some(v) = self.workers {
            cfg.workers_cap = v;
        }
        if let Some(v) = self.max_attempts {
            cfg.max_attempts = v;
        }
        if let Some(v) = self.reprocess_threshold {
            cfg.reprocess_threshold = Some(v);
        }
        if let Some(w) = self.weights {
            cfg.weights = w;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(o) = &self.metrics_out {
            cfg.metrics_out = Some(o.clone());
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    write_text(path, &text)
}

fn write_text(path: &Path, text: &str) -> Result<(), String> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    }
    fs::write(path, format!("{text}\n")).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn fail(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_FAILURE
}

fn make_backend(cfg: &PipelineConfig) -> Result<Box<dyn ExtractionBackend>, String> {
    match cfg.backend.kind {
        BackendKind::Mock => Ok(Box::new(MockBackend)),
        BackendKind::Http => HttpBackend::new(cfg.backend.http_settings())
            .map(|b| Box::new(b) as Box<dyn ExtractionBackend>)
            .map_err(|e| e.to_string()),
    }
}

pub fn cmd_process(input: &Path, opts: &Overrides) -> i32 {
    let cfg = match opts.resolve() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let backend = match make_backend(&cfg) {
        Ok(b) => b,
        Err(e) => return fail(e),
    };
    process_with_backend(input, &cfg, backend.as_ref())
}

/// `process` with a caller-supplied backend.
pub fn process_with_backend(input: &Path, cfg: &PipelineConfig, backend: &dyn ExtractionBackend) -> i32 {
    let load_start = Instant::now();
    let source = match load_markdown(input) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let load_seconds = load_start.elapsed().as_secs_f64();

    let outcome = match run_process(&source, cfg, backend, load_seconds) {
        Ok(o) => o,
        Err(e @ PipelineError::Merge { .. }) => return fail(format!("no record produced: {e}")),
        Err(e) => return fail(e),
    };

    let out = cfg.out.clone().unwrap_or_else(|| sibling_path(input, "record"));
    let metrics_out = cfg.metrics_out.clone().unwrap_or_else(|| sibling_path(&out, "metrics"));
    let written = write_text(&out, &outcome.record_json)
        .and_then(|_| write_json(&sibling_path(&out, "validation"), &outcome.validation))
        .and_then(|_| write_json(&metrics_out, &outcome.metrics))
        .and_then(|_| write_json(&sibling_path(&out, "summary"), &outcome.summary));
    if let Err(e) = written {
        return fail(e);
    }

    for issue in &outcome.validation.issues {
        eprintln!("{issue}");
    }
    print!("{}", outcome.metrics.render_table());
    println!(
        "record: {} ({} steps), validation {}",
        out.display(),
        outcome.record.steps.len(),
        if outcome.validation.passed { "passed" } else { "failed" }
    );
    outcome.exit_code()
}

pub fn cmd_chunk(input: &Path, opts: &Overrides) -> i32 {
    let cfg = match opts.resolve() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let source = match load_markdown(input) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let chunking = match cfg.chunking() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let chunks = chunk_text_by_tokens(&source.text, &chunking, &WordTokenizer::new());
    let result = match &cfg.out {
        Some(p) => write_json(p, &chunks),
        None => serde_json::to_string_pretty(&chunks)
            .map(|s| println!("{s}"))
            .map_err(|e| e.to_string()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => fail(e),
    }
}

pub fn cmd_validate(record: &Path, out: Option<&Path>) -> i32 {
    let text = match fs::read_to_string(record) {
        Ok(t) => t,
        Err(e) => return fail(format!("cannot read {}: {e}", record.display())),
    };
    let report = validate_all(&text);
    match serde_json::to_string_pretty(&report) {
        Ok(s) => println!("{s}"),
        Err(e) => return fail(e),
    }
    if let Some(p) = out {
        if let Err(e) = write_json(p, &report) {
            return fail(e);
        }
    }
    if report.passed {
        EXIT_OK
    } else {
        EXIT_INVALID
    }
}

pub fn cmd_score(source: &Path, record: &Path, opts: &Overrides) -> i32 {
    let cfg = match opts.resolve() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let started = Instant::now();
    let doc = match load_markdown(source) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let text = match fs::read_to_string(record) {
        Ok(t) => t,
        Err(e) => return fail(format!("cannot read {}: {e}", record.display())),
    };
    let parsed = match parse_record_str(&text) {
        Ok(r) => r,
        Err(issues) => {
            for i in &issues {
                eprintln!("{i}");
            }
            return fail(format!("{} is not a usable record", record.display()));
        }
    };
    let report = compute_metrics(&doc, &parsed, &cfg.weights, started.elapsed().as_secs_f64());
    print!("{}", report.render_table());
    let out = cfg.metrics_out.clone().unwrap_or_else(|| sibling_path(record, "metrics"));
    match write_json(&out, &report) {
        Ok(()) => EXIT_OK,
        Err(e) => fail(e),
    }
}

pub fn run(cli: Cli) -> i32 {
    match &cli.command {
        Command::Process { input, opts } => cmd_process(input, opts),
        Command::Chunk { input, opts } => cmd_chunk(input, opts),
        Command::Validate { record, out } => cmd_validate(record, out.as_deref()),
        Command::Score { source, record, opts } => cmd_score(source, record, opts),
    }
}
