//! End-to-end run: chunk, extract, merge, resolve references, validate,
//! score.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::chunker::{chunk_text_by_tokens, WordTokenizer};
use crate::config::{ConfigError, PipelineConfig};
use crate::extraction::{reprocess_low_coverage, run_parallel, ChunkResult, ExtractionBackend};
use crate::ingest::SourceDocument;
use crate::merge::{merge_chunk_results, resolve_cross_references, MergeError};
use crate::metrics::{compute_metrics, MetricsReport};
use crate::schema::BmrRecord;
use crate::validation::{validate_all, ValidationReport};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{source} ({failed} of {chunks} chunks failed)")]
    Merge {
        source: MergeError,
        chunks: usize,
        failed: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChunkAttempt {
    pub index: usize,
    pub attempts_used: u32,
    pub succeeded: bool,
    pub failure: Option<String>,
    pub seconds: f64,
}

/// Timing and outcome of one run. The only output that is not
/// deterministic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub input: PathBuf,
    pub chunk_count: usize,
    pub chunks: Vec<ChunkAttempt>,
    pub total_seconds: f64,
    pub load_seconds: f64,
    pub avg_chunk_seconds: f64,
    pub validation_passed: bool,
    pub composite: f64,
}

#[derive(Debug, Clone)]
pub struct ProcessOutcome {
    pub record: BmrRecord,
    pub record_json: String,
    pub validation: ValidationReport,
    pub metrics: MetricsReport,
    pub summary: RunSummary,
    pub chunk_results: Vec<ChunkResult>,
}

impl ProcessOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.validation.passed {
            0
        } else {
            1
        }
    }
}

fn attempts(results: &[ChunkResult]) -> Vec<ChunkAttempt> {
    results
        .iter()
        .map(|r| ChunkAttempt {
            index: r.index,
            attempts_used: r.attempts_used,
            succeeded: r.succeeded(),
            failure: r.failure.map(|f| f.as_str().to_string()),
            seconds: r.seconds,
        })
        .collect()
}

/// Runs the whole pipeline on an already loaded document.
///
/// `load_seconds` is reported as given so callers can include file I/O.
pub fn run_process(
    source: &SourceDocument,
    cfg: &PipelineConfig,
    backend: &dyn ExtractionBackend,
    load_seconds: f64,
) -> Result<ProcessOutcome, PipelineError> {
    cfg.validate()?;
    let started = Instant::now();
    let tokenizer = WordTokenizer::new();
    let chunking = cfg.chunking().map_err(ConfigError::from)?;
    let chunks = chunk_text_by_tokens(&source.text, &chunking, &tokenizer);
    tracing::info!(chunks = chunks.len(), "document chunked");

    let extraction = cfg.extraction();
    let mut results = run_parallel(&chunks, &extraction, backend);
    if let Some(threshold) = cfg.reprocess_threshold {
        results = reprocess_low_coverage(results, &chunks, threshold, &extraction, backend);
    }

    let (merged, merge_issues) = merge_chunk_results(&results).map_err(|source| PipelineError::Merge {
        source,
        chunks: chunks.len(),
        failed: results.iter().filter(|r| !r.succeeded()).count(),
    })?;
    let (record, _) = resolve_cross_references(&merged);
    let record_json = record.to_json_pretty();

    let mut validation = validate_all(&record_json);
    validation.extend(merge_issues);

    let elapsed = started.elapsed().as_secs_f64() + load_seconds;
    let metrics = compute_metrics(source, &record, &cfg.weights, elapsed);

    let chunk_seconds: f64 = results.iter().map(|r| r.seconds).sum();
    let summary = RunSummary {
        input: source.path.clone(),
        chunk_count: chunks.len(),
        chunks: attempts(&results),
        total_seconds: elapsed,
        load_seconds,
        avg_chunk_seconds: if results.is_empty() {
            0.0
        } else {
            chunk_seconds / results.len() as f64
        },
        validation_passed: validation.passed,
        composite: metrics.composite,
    };
    Ok(ProcessOutcome {
        record,
        record_json,
        validation,
        metrics,
        summary,
        chunk_results: results,
    })
}

/// `dir/name.json` -> `dir/name.<suffix>.json`.
pub fn sibling_path(base: &Path, suffix: &str) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    base.with_file_name(format!("{stem}.{suffix}.json"))
}
