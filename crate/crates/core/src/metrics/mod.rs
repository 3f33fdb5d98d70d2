//! Quality metrics comparing a record against its source markdown.
//!
//! All percentage metrics return 100 when the source offers nothing to
//! measure. The composite is a weighted mean of the ten headline metrics.

pub mod detect;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::chunker::split_sentences;
use crate::ingest::{find_image_markers, SourceDocument};
use crate::merge::detect_references;
use crate::schema::{BmrRecord, Content, ContentKind};
pub use detect::normalize_words;
use detect::{canonical_number, canonical_unit, content_words, is_conditional, unit_pairs};

const COVERAGE_SHARE: f64 = 0.6;

fn ratio(hit: usize, total: usize) -> f64 {
    if total == 0 {
        100.0
    } else {
        100.0 * hit as f64 / total as f64
    }
}

const SKIPPED_KEYS: [&str; 6] = ["id", "phase_id", "group_id", "type", "references", "target"];

/// Every string and number in a JSON value except ids, type tags and
/// derived reference annotations.
fn collect_text(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::String(s) => out.push(s.clone()),
        Value::Number(n) => out.push(n.to_string()),
        Value::Array(a) => a.iter().for_each(|x| collect_text(x, out)),
        Value::Object(m) => {
            for (k, x) in m {
                if !SKIPPED_KEYS.contains(&k.as_str()) {
                    collect_text(x, out);
                }
            }
        }
        Value::Bool(_) | Value::Null => {}
    }
}

fn value_text(v: &Value) -> String {
    let mut parts = Vec::new();
    collect_text(v, &mut parts);
    parts.join(" ")
}

fn record_text(record: &BmrRecord) -> String {
    value_text(&record.to_value())
}

/// Crude word coverage of arbitrary text by a record.
pub fn crude_word_coverage_text(source: &str, record: &BmrRecord) -> f64 {
    let src = normalize_words(source);
    if src.is_empty() {
        return 100.0;
    }
    let out = normalize_words(&record_text(record));
    ratio(src.intersection(&out).count(), src.len())
}

/// `100 × |W_src ∩ W_out| / |W_src|` over normalized word sets.
pub fn crude_word_coverage(source: &SourceDocument, record: &BmrRecord) -> f64 {
    crude_word_coverage_text(&source.text, record)
}

/// Word sets of every place a source sentence may land intact: each content,
/// step name, phase name, group name, and the header block.
fn containers(record: &BmrRecord) -> Vec<(Option<ContentKind>, BTreeSet<String>)> {
    let mut out = vec![(None, content_words(&value_text(&serde_json::to_value(&record.header).unwrap())))];
    for g in &record.groups {
        out.push((None, content_words(&value_text(&g.group_name.value))));
    }
    for p in &record.phases {
        out.push((None, content_words(&value_text(&p.phase_name.value))));
    }
    for s in &record.steps {
        out.push((None, content_words(&value_text(&s.step_name.value))));
        for c in &s.content {
            out.push((Some(c.kind), content_words(&value_text(&serde_json::to_value(c).unwrap()))));
        }
    }
    out
}

fn covered_by(words: &BTreeSet<String>, container: &BTreeSet<String>) -> bool {
    let hit = words.iter().filter(|w| container.contains(*w)).count();
    hit as f64 >= COVERAGE_SHARE * words.len() as f64
}

/// Units that carry content words and are not page furniture.
fn scored_units(text: &str) -> Vec<(&str, BTreeSet<String>)> {
    detect::text_units(text)
        .into_iter()
        .filter(|u| !detect::is_boilerplate(u))
        .map(|u| (u, content_words(u)))
        .filter(|(_, w)| !w.is_empty())
        .collect()
}

/// Share of source sentences (split at line breaks, boilerplate dropped)
/// whose content words land at least 60% inside one record container.
pub fn context_aware_coverage(source: &SourceDocument, record: &BmrRecord) -> f64 {
    let units = scored_units(&source.text);
    let boxes = containers(record);
    let covered = units
        .iter()
        .filter(|(_, w)| boxes.iter().any(|(_, b)| covered_by(w, b)))
        .count();
    ratio(covered, units.len())
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Share of references detected in the source that the record carries as a
/// reference note or a link.
pub fn reference_coverage(source: &SourceDocument, record: &BmrRecord) -> f64 {
    let detected = detect_references(&source.text);
    let mut notes = HashSet::new();
    let mut links = Vec::new();
    for (_, c) in record.contents() {
        for n in c.references.iter().flatten() {
            notes.insert(squash(&n.text));
        }
        if let Some(l) = &c.link {
            links.push(squash(&format!("{} {}", l.link_text, l.url)));
        }
        if let Some(a) = &c.attachment {
            links.push(squash(&format!("{} {}", a.name, a.reference.as_deref().unwrap_or(""))));
        }
    }
    let hit = detected
        .iter()
        .filter(|d| {
            let t = squash(&d.text);
            notes.contains(&t) || links.iter().any(|l| l.contains(&t))
        })
        .count();
    ratio(hit, detected.len())
}

/// Share of parent links (phase to group, step to phase, step to group)
/// that resolve, with each step's group matching its phase's group.
pub fn hierarchy_preservation(record: &BmrRecord) -> f64 {
    let groups: HashSet<&str> = record.groups.iter().map(|g| g.id.as_str()).collect();
    let phases: HashMap<&str, &str> = record
        .phases
        .iter()
        .map(|p| (p.id.as_str(), p.group_id.as_str()))
        .collect();
    let mut valid = 0;
    let mut total = 0;
    for p in &record.phases {
        total += 1;
        valid += usize::from(groups.contains(p.group_id.as_str()));
    }
    for s in &record.steps {
        total += 2;
        let phase_group = phases.get(s.phase_id.as_str());
        valid += usize::from(phase_group.is_some());
        let group_ok = groups.contains(s.group_id.as_str()) && phase_group.is_none_or(|g| *g == s.group_id);
        valid += usize::from(group_ok);
    }
    ratio(valid, total)
}

/// Length of the longest strictly increasing subsequence, as a share of the
/// sequence length. Fewer than two items score 100.
pub fn lis_percentage(positions: &[usize]) -> f64 {
    if positions.len() < 2 {
        return 100.0;
    }
    let mut tails: Vec<usize> = Vec::new();
    for &p in positions {
        let at = tails.partition_point(|&t| t < p);
        if at == tails.len() {
            tails.push(p);
        } else {
            tails[at] = p;
        }
    }
    ratio(tails.len(), positions.len())
}

/// Order agreement between source step headings and the record's steps.
pub fn sequence_preservation(source: &SourceDocument, record: &BmrRecord) -> f64 {
    let names: Vec<Option<String>> = record
        .steps
        .iter()
        .map(|s| s.step_name.as_str().map(squash))
        .collect();
    let mut used = vec![false; names.len()];
    let mut positions = Vec::new();
    for heading in detect::step_headings(&source.text) {
        let h = squash(&heading);
        if let Some(pos) = (0..names.len()).find(|&i| !used[i] && names[i].as_deref() == Some(h.as_str())) {
            used[pos] = true;
            positions.push(pos);
        }
    }
    lis_percentage(&positions)
}

fn path_exists(record: &BmrRecord, path: &str) -> bool {
    let mut parts = path.split('.');
    let Some(step) = parts.next().and_then(|p| index_of(p, "steps")) else {
        return false;
    };
    let Some(s) = record.steps.get(step) else {
        return false;
    };
    match parts.next() {
        None => true,
        Some(p) => index_of(p, "content").is_some_and(|c| c < s.content.len()) && parts.next().is_none(),
    }
}

fn index_of(part: &str, name: &str) -> Option<usize> {
    part.strip_prefix(name)?.strip_prefix('[')?.strip_suffix(']')?.parse().ok()
}

/// Share of internal references (id links and resolved reference notes)
/// whose target exists.
pub fn cross_reference_integrity(record: &BmrRecord) -> f64 {
    let groups: HashSet<&str> = record.groups.iter().map(|g| g.id.as_str()).collect();
    let phases: HashSet<&str> = record.phases.iter().map(|p| p.id.as_str()).collect();
    let mut ok = 0;
    let mut total = 0;
    for p in &record.phases {
        total += 1;
        ok += usize::from(groups.contains(p.group_id.as_str()));
    }
    for s in &record.steps {
        total += 2;
        ok += usize::from(phases.contains(s.phase_id.as_str()));
        ok += usize::from(groups.contains(s.group_id.as_str()));
    }
    for (_, c) in record.contents() {
        for target in c.references.iter().flatten().filter_map(|n| n.target.as_deref()) {
            total += 1;
            ok += usize::from(path_exists(record, target));
        }
    }
    ratio(ok, total)
}

fn normalize_formula(f: &str) -> String {
    f.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '×' | '*' | 'X' => 'x',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}

fn variable_covered(label: &str, names: &[(String, String)]) -> bool {
    let label = squash(label);
    names.iter().any(|(name, desc)| {
        label == *name
            || label == *desc
            || (!name.is_empty() && (label.split(' ').any(|w| w == name) || name.contains(&label)))
    })
}

fn calculations_of(record: &BmrRecord) -> impl Iterator<Item = &crate::schema::Calculation> {
    record.contents().filter_map(|(_, c)| c.calculation.as_ref())
}

/// Share of source calculations whose formula and listed variables survive
/// in some calculation content.
pub fn calculation_fidelity(source: &SourceDocument, record: &BmrRecord) -> f64 {
    let detected = detect::calculations(&source.text);
    let preserved = detected
        .iter()
        .filter(|src| {
            let formula = normalize_formula(&src.formula);
            calculations_of(record).any(|calc| {
                let names: Vec<(String, String)> = calc
                    .variables
                    .iter()
                    .map(|v| (squash(&v.name), squash(&v.description)))
                    .collect();
                normalize_formula(&calc.formula) == formula
                    && src.variables.iter().all(|l| variable_covered(l, &names))
            })
        })
        .count();
    ratio(preserved, detected.len())
}

const CONDITIONAL_KINDS: [ContentKind; 4] = [
    ContentKind::Instruction,
    ContentKind::Note,
    ContentKind::Warning,
    ContentKind::Paragraph,
];

/// Share of conditional source sentences carried, keyword intact, by an
/// instruction, note, warning or paragraph.
pub fn conditional_logic_fidelity(source: &SourceDocument, record: &BmrRecord) -> f64 {
    let detected: Vec<BTreeSet<String>> = detect::text_units(&source.text)
        .into_iter()
        .filter(|u| is_conditional(u))
        .map(content_words)
        .collect();
    let candidates: Vec<BTreeSet<String>> = record
        .contents()
        .filter(|(_, c)| CONDITIONAL_KINDS.contains(&c.kind) && c.strings().iter().any(|s| is_conditional(s)))
        .map(|(_, c)| content_words(&c.strings().join(" ")))
        .collect();
    let preserved = detected
        .iter()
        .filter(|w| w.is_empty() || candidates.iter().any(|b| covered_by(w, b)))
        .count();
    ratio(preserved, detected.len())
}

fn json_scalar(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(canonical_number(&n.to_string())),
        Value::String(s) => Some(canonical_number(s)),
        _ => None,
    }
}

fn record_unit_pairs(record: &BmrRecord) -> HashSet<(String, String)> {
    let mut out: HashSet<(String, String)> = HashSet::new();
    let mut strings = Vec::new();
    collect_text(&record.to_value(), &mut strings);
    for s in &strings {
        out.extend(unit_pairs(s));
    }
    let mut add = |value: Option<String>, unit: Option<&str>| {
        if let (Some(v), Some(u)) = (value, unit) {
            out.insert((v, canonical_unit(u.trim())));
        }
    };
    for (_, c) in record.contents() {
        for f in c.fields.iter().flatten() {
            add(f.value.as_deref().map(canonical_number), f.unit.as_deref());
        }
        if let Some(calc) = &c.calculation {
            for v in &calc.variables {
                add(v.value.as_ref().and_then(json_scalar), v.unit.as_deref());
            }
            if let Some(r) = &calc.result {
                add(json_scalar(&r.value), r.unit.as_deref());
            }
        }
    }
    out
}

/// Share of distinct source `(number, unit)` pairs that appear together in
/// the record.
pub fn unit_fidelity(source: &SourceDocument, record: &BmrRecord) -> f64 {
    let detected: BTreeSet<(String, String)> = unit_pairs(&source.text).into_iter().collect();
    let present = record_unit_pairs(record);
    ratio(detected.iter().filter(|p| present.contains(*p)).count(), detected.len())
}

/// Share of source form lines captured by a form field with the same label
/// and, for filled lines, the same value. Blank lines need a null value.
pub fn field_accuracy(source: &SourceDocument, record: &BmrRecord) -> f64 {
    let detected = detect::form_lines(&source.text);
    let fields: Vec<(String, Option<String>)> = record
        .contents()
        .flat_map(|(_, c)| c.fields.iter().flatten())
        .map(|f| (squash(&f.label), f.value.as_deref().map(|v| canonical_number(&squash(v)))))
        .collect();
    let captured = detected
        .iter()
        .filter(|line| {
            let label = squash(&line.label);
            let value = line.value.as_deref().map(|v| canonical_number(&squash(v)));
            fields.iter().any(|(l, v)| *l == label && *v == value)
        })
        .count();
    ratio(captured, detected.len())
}

/// Share of source pipe tables whose header cells all appear in one table
/// content's headers.
pub fn table_preservation(source: &SourceDocument, record: &BmrRecord) -> f64 {
    let detected = detect::table_headers(&source.text);
    let tables: Vec<HashSet<String>> = record
        .contents()
        .filter_map(|(_, c)| c.headers.as_ref())
        .map(|h| h.iter().map(|x| squash(x)).collect())
        .collect();
    let preserved = detected
        .iter()
        .filter(|hs| tables.iter().any(|t| hs.iter().all(|h| t.contains(&squash(h)))))
        .count();
    ratio(preserved, detected.len())
}

/// Share of `[Image Text: ...]` markers whose text appears in an image content.
pub fn image_preservation(source: &SourceDocument, record: &BmrRecord) -> f64 {
    let markers = find_image_markers(&source.text).markers;
    let images: Vec<String> = record
        .contents()
        .filter(|(_, c)| c.kind == ContentKind::Image)
        .map(|(_, c)| squash(&c.text))
        .collect();
    let preserved = markers
        .iter()
        .filter(|m| {
            let t = squash(&m.inner_text);
            images.iter().any(|i| i.contains(&t))
        })
        .count();
    ratio(preserved, markers.len())
}

pub fn unique_step_types(record: &BmrRecord) -> usize {
    record
        .steps
        .iter()
        .filter(|s| !s.step_type.is_null())
        .map(|s| s.step_type.value.to_string())
        .collect::<HashSet<_>>()
        .len()
}

/// The ten metrics that feed the composite, in reporting order.
pub const METRIC_NAMES: [&str; 10] = [
    "hierarchy_preservation",
    "sequence_preservation",
    "cross_reference_integrity",
    "calculation_fidelity",
    "conditional_logic_fidelity",
    "unit_fidelity",
    "field_accuracy",
    "crude_word_coverage",
    "context_aware_coverage",
    "reference_coverage",
];

/// Non-negative weight per composite metric, keyed like [`METRIC_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightVector {
    pub hierarchy_preservation: f64,
    pub sequence_preservation: f64,
    pub cross_reference_integrity: f64,
    pub calculation_fidelity: f64,
    pub conditional_logic_fidelity: f64,
    pub unit_fidelity: f64,
    pub field_accuracy: f64,
    pub crude_word_coverage: f64,
    pub context_aware_coverage: f64,
    pub reference_coverage: f64,
}

impl Default for WeightVector {
    fn default() -> Self {
        Self::from_array([1.0; 10])
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightError {
    #[error("weight for {0} must be a finite non-negative number")]
    Negative(&'static str),
    #[error("weights must not all be zero")]
    AllZero,
    #[error("expected 10 comma-separated weights or name=value pairs: {0}")]
    Syntax(String),
}

impl WeightVector {
    pub fn from_array(w: [f64; 10]) -> Self {
        Self {
            hierarchy_preservation: w[0],
            sequence_preservation: w[1],
            cross_reference_integrity: w[2],
            calculation_fidelity: w[3],
            conditional_logic_fidelity: w[4],
            unit_fidelity: w[5],
            field_accuracy: w[6],
            crude_word_coverage: w[7],
            context_aware_coverage: w[8],
            reference_coverage: w[9],
        }
    }

    pub fn to_array(&self) -> [f64; 10] {
        [
            self.hierarchy_preservation,
            self.sequence_preservation,
            self.cross_reference_integrity,
            self.calculation_fidelity,
            self.conditional_logic_fidelity,
            self.unit_fidelity,
            self.field_accuracy,
            self.crude_word_coverage,
            self.context_aware_coverage,
            self.reference_coverage,
        ]
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        let w = self.to_array();
        if let Some(i) = w.iter().position(|x| !x.is_finite() || *x < 0.0) {
            return Err(WeightError::Negative(METRIC_NAMES[i]));
        }
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(WeightError::AllZero);
        }
        Ok(())
    }
}

impl FromStr for WeightVector {
    type Err = WeightError;

    /// Accepts `w1,...,w10` in [`METRIC_NAMES`] order, or `name=w` pairs
    /// overriding the equal default.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || WeightError::Syntax(s.to_string());
        let parts: Vec<&str> = s.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
        let w = if parts.iter().all(|p| p.contains('=')) {
            let mut w = [1.0; 10];
            for p in &parts {
                let (k, v) = p.split_once('=').ok_or_else(syntax)?;
                let i = METRIC_NAMES.iter().position(|n| *n == k.trim()).ok_or_else(syntax)?;
                w[i] = v.trim().parse().map_err(|_| syntax())?;
            }
            w
        } else {
            let values: Vec<f64> = parts.iter().map(|p| p.parse()).collect::<Result<_, _>>().map_err(|_| syntax())?;
            values.try_into().map_err(|_| syntax())?
        };
        let v = Self::from_array(w);
        v.validate()?;
        Ok(v)
    }
}

/// Weighted arithmetic mean of the ten composite metrics.
pub fn composite_score(values: &[f64; 10], weights: &WeightVector) -> f64 {
    let w = weights.to_array();
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    values.iter().zip(w).map(|(v, w)| v * w).sum::<f64>() / total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "Needs-review")]
    NeedsReview,
    Acceptable,
    Excellent,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Excellent => "Excellent",
            Self::Acceptable => "Acceptable",
            Self::NeedsReview => "Needs-review",
        })
    }
}

pub fn status_for(score: f64) -> Status {
    if score >= 85.0 {
        Status::Excellent
    } else if score >= 65.0 {
        Status::Acceptable
    } else {
        Status::NeedsReview
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DocumentStats {
    pub source_words: usize,
    pub source_sentences: usize,
    pub groups: usize,
    pub phases: usize,
    pub steps: usize,
    pub contents: usize,
    pub tables: usize,
    pub images: usize,
    pub calculations: usize,
}

/// Display label, report key, score.
type Row<'a> = (&'a str, &'a str, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub crude_word_coverage: f64,
    pub context_aware_coverage: f64,
    pub reference_coverage: f64,
    pub hierarchy_preservation: f64,
    pub sequence_preservation: f64,
    pub cross_reference_integrity: f64,
    pub calculation_fidelity: f64,
    pub conditional_logic_fidelity: f64,
    pub unit_fidelity: f64,
    pub field_accuracy: f64,
    pub table_preservation: f64,
    pub image_preservation: f64,
    pub unique_step_types: usize,
    pub processing_seconds: f64,
    pub composite: f64,
    pub statuses: HashMap<String, Status>,
    pub document_stats: DocumentStats,
}

impl MetricsReport {
    /// The ten composite inputs in [`METRIC_NAMES`] order.
    pub fn composite_inputs(&self) -> [f64; 10] {
        [
            self.hierarchy_preservation,
            self.sequence_preservation,
            self.cross_reference_integrity,
            self.calculation_fidelity,
            self.conditional_logic_fidelity,
            self.unit_fidelity,
            self.field_accuracy,
            self.crude_word_coverage,
            self.context_aware_coverage,
            self.reference_coverage,
        ]
    }

    /// Recomputes the composite and every status band.
    pub fn rescore(&mut self, weights: &WeightVector) {
        let inputs = self.composite_inputs();
        self.composite = composite_score(&inputs, weights);
        self.statuses = METRIC_NAMES
            .iter()
            .zip(inputs)
            .map(|(n, v)| (n.to_string(), status_for(v)))
            .chain([
                ("table_preservation".to_string(), status_for(self.table_preservation)),
                ("image_preservation".to_string(), status_for(self.image_preservation)),
                ("composite".to_string(), status_for(self.composite)),
            ])
            .collect();
    }

    /// Plain-text table grouped into structural, content fidelity, coverage
    /// and performance rows.
    pub fn render_table(&self) -> String {
        let status = |k: &str| self.statuses.get(k).map_or("--".to_string(), |s| s.to_string());
        let groups: [(&str, Vec<Row>); 3] = [
            (
                "Structural Metrics",
                vec![
                    ("Hierarchy Preservation", "hierarchy_preservation", self.hierarchy_preservation),
                    ("Sequence Preservation", "sequence_preservation", self.sequence_preservation),
                    ("Cross-Reference Integrity", "cross_reference_integrity", self.cross_reference_integrity),
                    ("Table Preservation", "table_preservation", self.table_preservation),
                    ("Image Preservation", "image_preservation", self.image_preservation),
                ],
            ),
            (
                "Content Fidelity Metrics",
                vec![
                    ("Calculation Fidelity", "calculation_fidelity", self.calculation_fidelity),
                    ("Conditional Logic", "conditional_logic_fidelity", self.conditional_logic_fidelity),
                    ("Unit Fidelity", "unit_fidelity", self.unit_fidelity),
                    ("Field-Level Accuracy", "field_accuracy", self.field_accuracy),
                ],
            ),
            (
                "Coverage Metrics",
                vec![
                    ("Crude Word Coverage", "crude_word_coverage", self.crude_word_coverage),
                    ("Context-Aware Coverage", "context_aware_coverage", self.context_aware_coverage),
                    ("Reference Coverage", "reference_coverage", self.reference_coverage),
                ],
            ),
        ];
        let mut out = String::new();
        let _ = writeln!(out, "{:<32} {:>10}  Status", "Metric", "Score (%)");
        for (title, rows) in groups {
            let _ = writeln!(out, "{title}");
            for (label, key, value) in rows {
                let _ = writeln!(out, "  {label:<30} {value:>10.2}  {}", status(key));
            }
        }
        let _ = writeln!(out, "Performance Metrics");
        let _ = writeln!(out, "  {:<30} {:>10}  --", "Processing Time", format!("{:.1} sec", self.processing_seconds));
        let _ = writeln!(out, "  {:<30} {:>10}  --", "Unique Step Types Identified", self.unique_step_types);
        let _ = writeln!(out, "{:<32} {:>10.2}  {}", "Composite Confidence Score", self.composite, status("composite"));
        out
    }
}

fn stats(source: &SourceDocument, record: &BmrRecord) -> DocumentStats {
    let contents: Vec<&Content> = record.contents().map(|(_, c)| c).collect();
    let count = |k: ContentKind| contents.iter().filter(|c| c.kind == k).count();
    DocumentStats {
        source_words: source.text.split_whitespace().count(),
        source_sentences: split_sentences(&source.text).len(),
        groups: record.groups.len(),
        phases: record.phases.len(),
        steps: record.steps.len(),
        contents: contents.len(),
        tables: count(ContentKind::Table),
        images: count(ContentKind::Image),
        calculations: contents.iter().filter(|c| c.calculation.is_some()).count(),
    }
}

pub fn compute_metrics(
    source: &SourceDocument,
    record: &BmrRecord,
    weights: &WeightVector,
    processing_seconds: f64,
) -> MetricsReport {
    let mut report = MetricsReport {
        crude_word_coverage: crude_word_coverage(source, record),
        context_aware_coverage: context_aware_coverage(source, record),
        reference_coverage: reference_coverage(source, record),
        hierarchy_preservation: hierarchy_preservation(record),
        sequence_preservation: sequence_preservation(source, record),
        cross_reference_integrity: cross_reference_integrity(record),
        calculation_fidelity: calculation_fidelity(source, record),
        conditional_logic_fidelity: conditional_logic_fidelity(source, record),
        unit_fidelity: unit_fidelity(source, record),
        field_accuracy: field_accuracy(source, record),
        table_preservation: table_preservation(source, record),
        image_preservation: image_preservation(source, record),
        unique_step_types: unique_step_types(record),
        processing_seconds: processing_seconds.max(0.0),
        composite: 0.0,
        statuses: HashMap::new(),
        document_stats: stats(source, record),
    };
    report.rescore(weights);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Field, FieldType, Group, Phase, Step};
    use serde_json::Map;

    fn doc(text: &str) -> SourceDocument {
        SourceDocument::from_text("t.md", text)
    }

    fn record_with(texts: &[&str]) -> BmrRecord {
        let mut r = BmrRecord::empty();
        r.groups.push(Group {
            id: "group-1".into(),
            group_name: Field::text("G"),
            extra: Map::new(),
        });
        r.phases.push(Phase {
            id: "phase-1".into(),
            group_id: "group-1".into(),
            phase_name: Field::text("P"),
            extra: Map::new(),
        });
        r.steps.push(Step {
            id: "step-1".into(),
            phase_id: "phase-1".into(),
            group_id: "group-1".into(),
            step_name: Field::text("S"),
            step_type: Field::null(FieldType::Text),
            content: texts.iter().map(|t| Content::new(ContentKind::Paragraph, *t)).collect(),
            extra: Map::new(),
        });
        r
    }

    #[test]
    fn crude_set_arithmetic() {
        let r = record_with(&["a1 b2 c3"]);
        assert_eq!(crude_word_coverage(&doc("a1 b2 c3 d4"), &r), 75.0);
        assert_eq!(crude_word_coverage(&doc(""), &r), 100.0);
    }

    #[test]
    fn ids_and_type_tags_do_not_count() {
        let r = record_with(&[]);
        assert_eq!(crude_word_coverage(&doc("paragraph text group"), &r), 0.0);
    }

    #[test]
    fn context_sentence_covered() {
        let r = record_with(&["Blending time: 15 minutes"]);
        assert_eq!(context_aware_coverage(&doc("Blending time: 15 minutes"), &r), 100.0);
        let r = record_with(&["Blending time 15 min"]);
        assert_eq!(context_aware_coverage(&doc("Blending time: 15.0 minutes"), &r), 100.0);
    }

    #[test]
    fn context_drops_boilerplate() {
        let r = record_with(&["Mix well"]);
        assert_eq!(context_aware_coverage(&doc("Mix well.\nPage 3 of 9\nPerformed by: ____"), &r), 100.0);
    }

    #[test]
    fn lis_cases() {
        assert!((lis_percentage(&[0, 2, 1]) - 66.666_666).abs() < 1e-3);
        assert_eq!(lis_percentage(&[0, 1, 2]), 100.0);
        assert_eq!(lis_percentage(&[3]), 100.0);
    }

    #[test]
    fn hierarchy_ratio() {
        let mut r = record_with(&[]);
        assert_eq!(hierarchy_preservation(&r), 100.0);
        r.steps[0].phase_id = "phase-9".into();
        // 3 links: phase->group ok, step->phase dangling, step->group ok
        assert!((hierarchy_preservation(&r) - 200.0 / 3.0).abs() < 1e-9);
        assert_eq!(hierarchy_preservation(&BmrRecord::empty()), 100.0);
    }

    #[test]
    fn composite_table_one() {
        let v = [100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 79.02, 88.74, 69.30, 67.65];
        let c = composite_score(&v, &WeightVector::default());
        assert!((c - 90.471).abs() < 0.01);
    }

    #[test]
    fn status_bands() {
        assert_eq!(status_for(89.13), Status::Excellent);
        assert_eq!(status_for(85.0), Status::Excellent);
        assert_eq!(status_for(79.02), Status::Acceptable);
        assert_eq!(status_for(65.0), Status::Acceptable);
        assert_eq!(status_for(50.0), Status::NeedsReview);
        assert_eq!(serde_json::to_string(&Status::NeedsReview).unwrap(), "\"Needs-review\"");
    }

    #[test]
    fn weights_parse() {
        let w: WeightVector = "1,1,1,1,1,1,1,1,1,1".parse().unwrap();
        assert_eq!(w, WeightVector::default());
        let w: WeightVector = "field_accuracy=2".parse().unwrap();
        assert_eq!(w.field_accuracy, 2.0);
        assert!("0,0,0,0,0,0,0,0,0,0".parse::<WeightVector>().is_err());
        assert!("-1,1,1,1,1,1,1,1,1,1".parse::<WeightVector>().is_err());
        assert!("1,2".parse::<WeightVector>().is_err());
        assert!("bogus=1".parse::<WeightVector>().is_err());
    }

    #[test]
    fn unique_types() {
        let mut r = record_with(&[]);
        assert_eq!(unique_step_types(&r), 0);
        let mut s = r.steps[0].clone();
        r.steps[0].step_type = Field::text("a");
        s.step_type = Field::text("b");
        r.steps.push(s.clone());
        s.step_type = Field::text("a");
        r.steps.push(s);
        assert_eq!(unique_step_types(&r), 2);
    }

    #[test]
    fn empty_sources_score_full() {
        let r = record_with(&[]);
        let d = doc("");
        for v in [
            reference_coverage(&d, &r),
            calculation_fidelity(&d, &r),
            conditional_logic_fidelity(&d, &r),
            unit_fidelity(&d, &r),
            field_accuracy(&d, &r),
            table_preservation(&d, &r),
            image_preservation(&d, &r),
            sequence_preservation(&d, &r),
        ] {
            assert_eq!(v, 100.0);
        }
    }

    #[test]
    fn formula_normalization() {
        assert_eq!(normalize_formula("(A + B) × 0.98"), normalize_formula("(A+B) x 0.98"));
    }
}
