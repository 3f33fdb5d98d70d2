//! Per-chunk extraction: prompting, response parsing, retry with repair
//! feedback, and a bounded worker pool.

mod backend;
mod mock;
mod prompt;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use backend::{BackendError, ExtractionBackend, HttpBackend, HttpSettings, MockBackend};
pub use mock::mock_extract;
pub use prompt::{build_prompt, repair_prompt};

use crate::chunker::Chunk;
use crate::metrics::crude_word_coverage_text;
use crate::schema::{parse_record, schema_prompt_text, BmrRecord};
use crate::validation::{IssueCode, Layer, ValidationIssue};

pub const DEFAULT_MAX_ATTEMPTS: u32 = 3;
pub const DEFAULT_WORKERS_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub model: String,
    pub max_attempts: u32,
    pub workers_cap: usize,
    /// Passed through to the backend untouched.
    pub params: Map<String, Value>,
    pub reprocess_threshold: Option<f64>,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            model: "mock".into(),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            workers_cap: DEFAULT_WORKERS_CAP,
            params: Map::new(),
            reprocess_threshold: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailureReason {
    BackendError,
    ParseFailed,
    SchemaInvalid,
}

impl FailureReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BackendError => "BACKEND_ERROR",
            Self::ParseFailed => "PARSE_FAILED",
            Self::SchemaInvalid => "SCHEMA_INVALID",
        }
    }
}

/// Outcome of extracting one chunk. Exactly one of `record` and `failure`
/// is set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChunkResult {
    pub index: usize,
    pub record: Option<BmrRecord>,
    pub attempts_used: u32,
    pub issues: Vec<ValidationIssue>,
    pub failure: Option<FailureReason>,
    pub seconds: f64,
}

impl ChunkResult {
    pub fn succeeded(&self) -> bool {
        self.record.is_some()
    }
}

/// Text between the first `<json>` and the last `</json>`, falling back to
/// the outermost braces with a `TAG_FALLBACK` warning.
pub fn extract_json_block(response: &str) -> Result<(&str, Option<ValidationIssue>), ValidationIssue> {
    if let (Some(open), Some(close)) = (response.find("<json>"), response.rfind("</json>")) {
        let start = open + "<json>".len();
        if start <= close {
            return Ok((&response[start..close], None));
        }
    }
    match (response.find('{'), response.rfind('}')) {
        (Some(a), Some(b)) if a < b => Ok((
            &response[a..=b],
            Some(ValidationIssue::warning(
                Layer::Syntactic,
                IssueCode::TagFallback,
                "$",
                "response has no <json></json> tags; used the outermost braces",
            )),
        )),
        _ => Err(ValidationIssue::error(
            Layer::Syntactic,
            IssueCode::NoJsonPayload,
            "$",
            "response carries neither <json></json> tags nor a JSON object",
        )),
    }
}

fn attempt_once(response: &str) -> Result<(BmrRecord, Vec<ValidationIssue>), (FailureReason, Vec<ValidationIssue>)> {
    let (payload, warning) = extract_json_block(response).map_err(|e| (FailureReason::ParseFailed, vec![e]))?;
    let mut issues: Vec<_> = warning.into_iter().collect();
    let value: Value = match serde_json::from_str(payload) {
        Ok(v) => v,
        Err(e) => {
            issues.push(ValidationIssue::error(
                Layer::Syntactic,
                IssueCode::JsonMalformed,
                "$",
                format!("line {} column {}: {e}", e.line(), e.column()),
            ));
            return Err((FailureReason::ParseFailed, issues));
        }
    };
    match parse_record(&value) {
        Ok(record) => Ok((record, issues)),
        Err(errs) => {
            issues.extend(errs);
            Err((FailureReason::SchemaInvalid, issues))
        }
    }
}

/// Extracts one chunk, retrying with the previous attempt's problems
/// appended to the prompt until a record parses or attempts run out.
pub fn process_single_chunk(
    index: usize,
    chunk: &Chunk,
    last_group_id: u64,
    total_chunks: usize,
    cfg: &ExtractionConfig,
    backend: &dyn ExtractionBackend,
) -> ChunkResult {
    let started = Instant::now();
    let base = build_prompt(chunk, index + 1, total_chunks, schema_prompt_text(), last_group_id);
    let max_attempts = cfg.max_attempts.max(1);
    let mut all_issues = Vec::new();
    let mut last_issues: Vec<ValidationIssue> = Vec::new();
    let mut failure = FailureReason::ParseFailed;

    for attempt in 1..=max_attempts {
        let prompt = if last_issues.is_empty() {
            base.clone()
        } else {
            repair_prompt(&base, &last_issues)
        };
        let outcome = backend
            .complete(&prompt, &cfg.model, &cfg.params)
            .map_err(|e| {
                let issue = ValidationIssue::error(Layer::Syntactic, IssueCode::BackendError, "$", e.to_string());
                (FailureReason::BackendError, vec![issue])
            })
            .and_then(|text| attempt_once(&text));
        match outcome {
            Ok((record, issues)) => {
                all_issues.extend(issues);
                return ChunkResult {
                    index,
                    record: Some(record),
                    attempts_used: attempt,
                    issues: all_issues,
                    failure: None,
                    seconds: started.elapsed().as_secs_f64(),
                };
            }
            Err((reason, issues)) => {
                tracing::debug!(chunk = index, attempt, reason = reason.as_str(), "extraction attempt failed");
                failure = reason;
                all_issues.extend(issues.iter().cloned());
                last_issues = issues;
            }
        }
    }
    ChunkResult {
        index,
        record: None,
        attempts_used: max_attempts,
        issues: all_issues,
        failure: Some(failure),
        seconds: started.elapsed().as_secs_f64(),
    }
}

/// Extracts all chunks on at most `min(workers_cap, chunks.len())` threads.
/// Results come back ordered by chunk index.
pub fn run_parallel(chunks: &[Chunk], cfg: &ExtractionConfig, backend: &dyn ExtractionBackend) -> Vec<ChunkResult> {
    let indices: Vec<usize> = (0..chunks.len()).collect();
    run_subset(chunks, &indices, cfg, backend)
}

fn run_subset(
    chunks: &[Chunk],
    which: &[usize],
    cfg: &ExtractionConfig,
    backend: &dyn ExtractionBackend,
) -> Vec<ChunkResult> {
    let workers = cfg.workers_cap.max(1).min(which.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<ChunkResult>>> = Mutex::new(vec![None; which.len()]);
    let total = chunks.len();

    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&i) = which.get(k) else { break };
                // ids are chunk-local; the merge renumbers them
                let result = process_single_chunk(i, &chunks[i], 0, total, cfg, backend);
                slots.lock().expect("result slots")[k] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|r| r.expect("every chunk processed"))
        .collect()
}

fn chunk_coverage(chunk: &Chunk, result: &ChunkResult) -> f64 {
    result
        .record
        .as_ref()
        .map_or(0.0, |r| crude_word_coverage_text(&chunk.text, r))
}

/// Re-extracts, once, every chunk whose crude coverage is strictly below
/// `threshold`, keeping whichever result covers more.
pub fn reprocess_low_coverage(
    results: Vec<ChunkResult>,
    chunks: &[Chunk],
    threshold: f64,
    cfg: &ExtractionConfig,
    backend: &dyn ExtractionBackend,
) -> Vec<ChunkResult> {
    let low: Vec<usize> = results
        .iter()
        .filter(|r| chunk_coverage(&chunks[r.index], r) < threshold)
        .map(|r| r.index)
        .collect();
    if low.is_empty() {
        return results;
    }
    tracing::info!(chunks = ?low, threshold, "reprocessing low-coverage chunks");
    let retried = run_subset(chunks, &low, cfg, backend);
    let mut results = results;
    for new in retried {
        let Some(slot) = results.iter_mut().find(|r| r.index == new.index) else {
            continue;
        };
        let chunk = &chunks[new.index];
        if chunk_coverage(chunk, &new) > chunk_coverage(chunk, slot) {
            *slot = new;
        }
    }
    results
}
