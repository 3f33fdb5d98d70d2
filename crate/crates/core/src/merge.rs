//! Combining per-chunk records into one document.
//!
//! Each chunk is extracted with locally numbered ids. Merging renumbers them
//! onto global counters, concatenates the class arrays in chunk order and
//! folds the headers together. Cross-reference resolution then annotates
//! contents that mention figures, tables, steps or controlled documents.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use crate::extraction::ChunkResult;
use crate::schema::{BmrRecord, ContentKind, IdKind, ReferenceNote};
use crate::validation::{IssueCode, Layer, ValidationIssue};

/// Highest id suffixes handed out so far.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MergeState {
    pub max_group_id: u64,
    pub max_phase_id: u64,
    pub max_step_id: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MergeError {
    #[error("no chunk produced a record")]
    EmptyMerge,
}

fn merge_issue(code: IssueCode, path: impl Into<String>, message: impl Into<String>) -> ValidationIssue {
    ValidationIssue::error(Layer::Structural, code, path, message)
}

fn assign(kind: IdKind, ids: &[String], counter: &mut u64) -> (Vec<String>, HashMap<String, String>) {
    let mut fresh = Vec::with_capacity(ids.len());
    let mut map = HashMap::new();
    for old in ids {
        *counter += 1;
        let new = kind.format(*counter);
        map.entry(old.clone()).or_insert_with(|| new.clone());
        fresh.push(new);
    }
    (fresh, map)
}

fn remap(
    map: &HashMap<String, String>,
    value: &mut String,
    path: String,
    issues: &mut Vec<ValidationIssue>,
) {
    match map.get(value.as_str()) {
        Some(new) => *value = new.clone(),
        None => issues.push(merge_issue(
            IssueCode::DanglingLocalRef,
            path,
            format!("{value:?} does not name an object in the same chunk"),
        )),
    }
}

/// Rewrites every id onto the next free global suffix. References that do
/// not resolve inside the record are left as they are and reported.
pub fn renumber_ids(mut record: BmrRecord, state: &mut MergeState) -> (BmrRecord, Vec<ValidationIssue>) {
    let mut issues = Vec::new();

    let old: Vec<String> = record.groups.iter().map(|g| g.id.clone()).collect();
    let (fresh, groups) = assign(IdKind::Group, &old, &mut state.max_group_id);
    for (g, id) in record.groups.iter_mut().zip(fresh) {
        g.id = id;
    }

    let old: Vec<String> = record.phases.iter().map(|p| p.id.clone()).collect();
    let (fresh, phases) = assign(IdKind::Phase, &old, &mut state.max_phase_id);
    for (i, (p, id)) in record.phases.iter_mut().zip(fresh).enumerate() {
        p.id = id;
        remap(&groups, &mut p.group_id, format!("phases[{i}].group_id"), &mut issues);
    }

    let old: Vec<String> = record.steps.iter().map(|s| s.id.clone()).collect();
    let (fresh, _) = assign(IdKind::Step, &old, &mut state.max_step_id);
    for (i, (s, id)) in record.steps.iter_mut().zip(fresh).enumerate() {
        s.id = id;
        remap(&phases, &mut s.phase_id, format!("steps[{i}].phase_id"), &mut issues);
        remap(&groups, &mut s.group_id, format!("steps[{i}].group_id"), &mut issues);
    }
    (record, issues)
}

/// Concatenates successful chunk records in chunk order.
///
/// Header slots take the first non-null value; a later, different non-null
/// value is reported as `HEADER_CONFLICT`. Failed chunks are reported as
/// `CHUNK_MISSING`.
pub fn merge_chunk_results(results: &[ChunkResult]) -> Result<(BmrRecord, Vec<ValidationIssue>), MergeError> {
    let mut ordered: Vec<&ChunkResult> = results.iter().collect();
    ordered.sort_by_key(|r| r.index);

    let mut merged: Option<BmrRecord> = None;
    let mut state = MergeState::default();
    let mut issues = Vec::new();

    for result in ordered {
        let Some(record) = &result.record else {
            let reason = result.failure.map(|f| f.as_str()).unwrap_or("no record");
            issues.push(merge_issue(
                IssueCode::ChunkMissing,
                format!("chunks[{}]", result.index),
                format!("chunk {} produced no record ({reason})", result.index),
            ));
            continue;
        };
        let (record, local) = renumber_ids(record.clone(), &mut state);
        issues.extend(local.into_iter().map(|mut i| {
            i.path = format!("chunks[{}].{}", result.index, i.path);
            i
        }));

        let Some(out) = merged.as_mut() else {
            merged = Some(record);
            continue;
        };
        for ((key, slot), (_, incoming)) in out.header.fields_mut().into_iter().zip(record.header.fields()) {
            if incoming.is_null() {
                continue;
            }
            if slot.is_null() {
                *slot = incoming.clone();
            } else if slot.value != incoming.value {
                issues.push(ValidationIssue::warning(
                    Layer::Structural,
                    IssueCode::HeaderConflict,
                    format!("header.{key}"),
                    format!(
                        "chunk {} has {} but {} was kept",
                        result.index, incoming.value, slot.value
                    ),
                ));
            }
        }
        for (k, v) in record.header.extra {
            out.header.extra.entry(k).or_insert(v);
        }
        for (k, v) in record.extra {
            out.extra.entry(k).or_insert(v);
        }
        out.groups.extend(record.groups);
        out.phases.extend(record.phases);
        out.steps.extend(record.steps);
    }

    merged.map(|r| (r, issues)).ok_or(MergeError::EmptyMerge)
}

/// A textual mention of another part of the document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossReference {
    pub source_path: String,
    pub ref_text: String,
    pub target_path: Option<String>,
    pub resolved: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefKind {
    Figure(usize),
    Table(usize),
    Step(usize),
    Document,
    Vague,
}

/// A reference found in free text, with its byte offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectedRef {
    pub start: usize,
    pub text: String,
    pub kind: RefKind,
}

fn ordinal_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(?:see|refer\s+to)\s+(?:(figure|fig\.|table)|(step))\s+(\d+)").unwrap()
    })
}

fn vague_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\bas\s+per\s+(?:the\s+)?(?:above|below|previous)(?:\s+[a-z]+)?").unwrap())
}

fn code_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[A-Z]{2,4}-[0-9]{4,6}").unwrap())
}

/// Finds figure, table, step, vague and document-code references in `text`,
/// ordered by position.
pub fn detect_references(text: &str) -> Vec<DetectedRef> {
    let mut found = Vec::new();
    for caps in ordinal_pattern().captures_iter(text) {
        let whole = caps.get(0).unwrap();
        let Ok(n) = caps[3].parse::<usize>() else { continue };
        let kind = match caps.get(1).map(|m| m.as_str().to_ascii_lowercase()) {
            Some(t) if t == "table" => RefKind::Table(n),
            Some(_) => RefKind::Figure(n),
            None => RefKind::Step(n),
        };
        found.push(DetectedRef {
            start: whole.start(),
            text: whole.as_str().to_string(),
            kind,
        });
    }
    for m in vague_pattern().find_iter(text) {
        found.push(DetectedRef {
            start: m.start(),
            text: m.as_str().to_string(),
            kind: RefKind::Vague,
        });
    }
    let bytes = text.as_bytes();
    for m in code_pattern().find_iter(text) {
        let before_ok = m.start() == 0 || !(bytes[m.start() - 1].is_ascii_alphanumeric() || bytes[m.start() - 1] == b'-');
        let after_ok = m.end() == bytes.len() || !(bytes[m.end()].is_ascii_alphanumeric() || bytes[m.end()] == b'-');
        if before_ok && after_ok {
            found.push(DetectedRef {
                start: m.start(),
                text: m.as_str().to_string(),
                kind: RefKind::Document,
            });
        }
    }
    found.sort_by_key(|r| r.start);
    found
}

/// Annotates every content that mentions another part of the document with
/// reference notes, and returns the references found.
///
/// Figures and tables resolve to the Nth image or table content in document
/// order, steps to the Nth step. Document codes and vague phrases such as
/// "as per above" never resolve. Re-running on an annotated record yields the
/// same record.
pub fn resolve_cross_references(record: &BmrRecord) -> (BmrRecord, Vec<CrossReference>) {
    let mut images = Vec::new();
    let mut tables = Vec::new();
    for (path, c) in record.contents() {
        match c.kind {
            ContentKind::Image => images.push(path),
            ContentKind::Table => tables.push(path),
            _ => {}
        }
    }
    let nth = |list: &[String], n: usize| n.checked_sub(1).and_then(|i| list.get(i)).cloned();

    let mut out = record.clone();
    let mut refs = Vec::new();
    for (si, step) in out.steps.iter_mut().enumerate() {
        for (ci, content) in step.content.iter_mut().enumerate() {
            let path = format!("steps[{si}].content[{ci}]");
            let mut notes = Vec::new();
            for s in content.strings() {
                for d in detect_references(s) {
                    let target = match d.kind {
                        RefKind::Figure(n) => nth(&images, n),
                        RefKind::Table(n) => nth(&tables, n),
                        RefKind::Step(n) => (n >= 1 && n <= record.steps.len()).then(|| format!("steps[{}]", n - 1)),
                        RefKind::Document | RefKind::Vague => None,
                    };
                    refs.push(CrossReference {
                        source_path: path.clone(),
                        ref_text: d.text.clone(),
                        resolved: target.is_some(),
                        target_path: target.clone(),
                    });
                    notes.push(ReferenceNote { text: d.text, target });
                }
            }
            content.references = (!notes.is_empty()).then_some(notes);
        }
    }
    (out, refs)
}
