#![allow(dead_code)]

pub mod faults;

use std::path::PathBuf;
use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use batchrec::config::{BackendKind, PipelineConfig};
use batchrec::extraction::{BackendError, ExtractionBackend, MockBackend};
use batchrec::ingest::{load_markdown, SourceDocument};
use batchrec::metrics::{self, METRIC_NAMES};
use batchrec::pipeline::{run_process, ProcessOutcome};
use batchrec::schema::BmrRecord;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{Map, Value};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub fn fixture_json(name: &str) -> Value {
    serde_json::from_str(&fixture_text(name)).unwrap()
}

pub fn source(name: &str) -> SourceDocument {
    load_markdown(fixture(name)).unwrap()
}

pub fn mock_config() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.backend.kind = BackendKind::Mock;
    cfg
}

pub fn process_fixture(name: &str) -> ProcessOutcome {
    run_process(&source(name), &mock_config(), &MockBackend, 0.0).unwrap()
}

/// The ten composite metrics of a record against its source, by name.
pub fn metric_values(source: &SourceDocument, record: &BmrRecord) -> Vec<(&'static str, f64)> {
    let values = [
        metrics::hierarchy_preservation(record),
        metrics::sequence_preservation(source, record),
        metrics::cross_reference_integrity(record),
        metrics::calculation_fidelity(source, record),
        metrics::conditional_logic_fidelity(source, record),
        metrics::unit_fidelity(source, record),
        metrics::field_accuracy(source, record),
        metrics::crude_word_coverage(source, record),
        metrics::context_aware_coverage(source, record),
        metrics::reference_coverage(source, record),
    ];
    METRIC_NAMES.iter().copied().zip(values).collect()
}

/// Every single-element deletion available in a JSON tree: removing one
/// array element, or blanking one string.
#[derive(Debug, Clone)]
pub enum Deletion {
    Remove(Vec<Step>),
    Blank(Vec<Step>),
}

#[derive(Debug, Clone)]
pub enum Step {
    Key(String),
    Index(usize),
}

fn walk(v: &Value, path: &mut Vec<Step>, out: &mut Vec<Deletion>) {
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                path.push(Step::Key(k.clone()));
                walk(child, path, out);
                path.pop();
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                path.push(Step::Index(i));
                out.push(Deletion::Remove(path.clone()));
                walk(child, path, out);
                path.pop();
            }
        }
        Value::String(s) if !s.is_empty() => out.push(Deletion::Blank(path.clone())),
        _ => {}
    }
}

pub fn deletions(v: &Value) -> Vec<Deletion> {
    let mut out = Vec::new();
    walk(v, &mut Vec::new(), &mut out);
    out
}

fn at<'a>(v: &'a mut Value, path: &[Step]) -> &'a mut Value {
    path.iter().fold(v, |node, step| match step {
        Step::Key(k) => &mut node[k.as_str()],
        Step::Index(i) => &mut node[*i],
    })
}

pub fn apply(v: &Value, d: &Deletion) -> Value {
    let mut out = v.clone();
    match d {
        Deletion::Remove(path) => {
            let (last, parent) = path.split_last().unwrap();
            let Step::Index(i) = last else { unreachable!() };
            at(&mut out, parent).as_array_mut().unwrap().remove(*i);
        }
        Deletion::Blank(path) => *at(&mut out, path) = Value::String(String::new()),
    }
    out
}

/// Returns the mock extraction after `delay`, tracking how many calls are
/// in flight at once.
pub struct LatencyBackend {
    pub delay: Duration,
    pub jitter_ms: u64,
    rng: Mutex<StdRng>,
    in_flight: AtomicUsize,
    pub peak: AtomicUsize,
    pub calls: AtomicUsize,
}

impl LatencyBackend {
    pub fn new(delay: Duration, jitter_ms: u64, seed: u64) -> Self {
        Self {
            delay,
            jitter_ms,
            rng: Mutex::new(StdRng::seed_from_u64(seed)),
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
        }
    }
}

impl ExtractionBackend for LatencyBackend {
    fn complete(&self, prompt: &str, model: &str, params: &Map<String, Value>) -> Result<String, BackendError> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        self.calls.fetch_add(1, Ordering::SeqCst);
        let extra = if self.jitter_ms > 0 {
            self.rng.lock().unwrap().gen_range(0..=self.jitter_ms)
        } else {
            0
        };
        std::thread::sleep(self.delay + Duration::from_millis(extra));
        let out = MockBackend.complete(prompt, model, params);
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        out
    }
}

/// Answers with text that carries no JSON until `failures` calls have been
/// made, then with the mock extraction.
pub struct FlakyBackend {
    pub failures: u32,
    pub calls: AtomicU32,
}

impl FlakyBackend {
    pub fn new(failures: u32) -> Self {
        Self {
            failures,
            calls: AtomicU32::new(0),
        }
    }
}

impl ExtractionBackend for FlakyBackend {
    fn complete(&self, prompt: &str, model: &str, params: &Map<String, Value>) -> Result<String, BackendError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        if n < self.failures {
            Ok("oops".into())
        } else {
            MockBackend.complete(prompt, model, params)
        }
    }
}

/// A document of sentences with the given token counts. Words are unique,
/// so order and loss checks can compare word lists directly.
pub fn sentence_document(lengths: &[usize]) -> String {
    let mut next = 0usize;
    let sentences: Vec<String> = lengths
        .iter()
        .map(|&n| {
            let words: Vec<String> = (0..n)
                .map(|_| {
                    next += 1;
                    format!("w{next}")
                })
                .collect();
            format!("{}.", words.join(" "))
        })
        .collect();
    sentences.join(" ")
}

/// Log-uniform integer in `[lo, hi]`.
pub fn log_uniform(rng: &mut impl Rng, lo: usize, hi: usize) -> usize {
    let x: f64 = rng.gen_range((lo as f64).ln()..=((hi as f64) + 0.999).ln());
    (x.exp().floor() as usize).clamp(lo, hi)
}
