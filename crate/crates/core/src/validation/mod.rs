//! Three validation layers over extracted records.
//!
//! * syntactic: the JSON parses, type tags are legal, tables are rectangular,
//!   and no code-constructor residue leaked into the output;
//! * structural: groups, phases and steps are flat, unique and closed under
//!   their id references;
//! * compliance: a closed rule set for GMP-relevant completeness (calculations,
//!   units on limits, named steps, header block, cross-references, pass/fail
//!   values).
//!
//! [`validate_all`] runs them in order and stops after the first layer that
//! reports an error.

pub mod issue;

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use regex::Regex;
use serde_json::Value;

use crate::merge::resolve_cross_references;
use crate::schema::{id_suffix, parse_record, BmrRecord, ContentKind, Field, FieldType, IdKind};
pub use issue::{IssueCode, Layer, Severity, ValidationIssue, ValidationReport};
use issue::{index, join};

fn residue_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\bnew\s+[A-Z][A-Za-z0-9_]*\s*\(|\bArray\s*\(\s*\)").unwrap())
}

fn syntactic(code: IssueCode, path: impl Into<String>, message: impl Into<String>) -> ValidationIssue {
    ValidationIssue::error(Layer::Syntactic, code, path, message)
}

fn structural(code: IssueCode, path: impl Into<String>, message: impl Into<String>) -> ValidationIssue {
    ValidationIssue::error(Layer::Structural, code, path, message)
}

pub fn validate_syntactic(json_text: &str) -> Vec<ValidationIssue> {
    let value: Value = match serde_json::from_str(json_text) {
        Ok(v) => v,
        Err(e) => {
            let mut issues = vec![syntactic(
                IssueCode::JsonMalformed,
                "$",
                format!("line {} column {}: {e}", e.line(), e.column()),
            )];
            if let Some(m) = residue_pattern().find(json_text) {
                issues.push(syntactic(
                    IssueCode::CodeSyntaxResidue,
                    "$",
                    format!("constructor syntax {:?} in output", m.as_str()),
                ));
            }
            return issues;
        }
    };
    let mut issues = Vec::new();
    check_residue(&value, "$", &mut issues);

    let Some(root) = value.as_object() else {
        return issues;
    };
    if let Some(header) = root.get("header").and_then(Value::as_object) {
        for (key, field) in header {
            check_field_types(field, &join("header", key), &mut issues);
        }
    }
    for (key, name_key) in [("groups", "group_name"), ("phases", "phase_name")] {
        for (i, item) in array_items(root.get(key)) {
            if let Some(f) = item.get(name_key) {
                check_field_types(f, &join(&index(key, i), name_key), &mut issues);
            }
        }
    }
    for (i, step) in array_items(root.get("steps")) {
        let sp = index("steps", i);
        for key in ["step_name", "step_type"] {
            if let Some(f) = step.get(key) {
                check_field_types(f, &join(&sp, key), &mut issues);
            }
        }
        for (j, content) in array_items(step.get("content")) {
            check_content_syntax(content, &index(&join(&sp, "content"), j), &mut issues);
        }
    }
    issues
}

fn array_items(v: Option<&Value>) -> impl Iterator<Item = (usize, &Value)> {
    v.and_then(Value::as_array).into_iter().flatten().enumerate()
}

fn check_residue(v: &Value, path: &str, issues: &mut Vec<ValidationIssue>) {
    match v {
        Value::String(s) => {
            if let Some(m) = residue_pattern().find(s) {
                issues.push(syntactic(
                    IssueCode::CodeSyntaxResidue,
                    path,
                    format!("constructor syntax {:?} in output", m.as_str()),
                ));
            }
        }
        Value::Array(a) => {
            for (i, item) in a.iter().enumerate() {
                check_residue(item, &index(path, i), issues);
            }
        }
        Value::Object(m) => {
            for (k, item) in m {
                check_residue(item, &join(path, k), issues);
            }
        }
        _ => {}
    }
}

fn check_field_types(field: &Value, path: &str, issues: &mut Vec<ValidationIssue>) {
    let Some(types) = field.get("type") else {
        return;
    };
    let tp = join(path, "type");
    match types {
        Value::Array(a) if !a.is_empty() => {
            for (i, t) in a.iter().enumerate() {
                if t.as_str().and_then(|s| s.parse::<FieldType>().ok()).is_none() {
                    issues.push(syntactic(
                        IssueCode::BadFieldType,
                        index(&tp, i),
                        format!("{t} is not a legal field type"),
                    ));
                }
            }
        }
        other => issues.push(syntactic(
            IssueCode::BadFieldType,
            tp,
            format!("expected a non-empty array of field types, got {other}"),
        )),
    }
}

fn check_content_syntax(content: &Value, path: &str, issues: &mut Vec<ValidationIssue>) {
    if let Some(t) = content.get("type") {
        if t.as_str().and_then(|s| s.parse::<ContentKind>().ok()).is_none() {
            issues.push(syntactic(
                IssueCode::BadContentKind,
                join(path, "type"),
                format!("{t} is not a legal content type"),
            ));
        }
    }
    let Some(rows) = content.get("rows").and_then(Value::as_array) else {
        return;
    };
    let expected = content
        .get("headers")
        .and_then(Value::as_array)
        .map(Vec::len)
        .or_else(|| rows.first().and_then(Value::as_array).map(Vec::len));
    let rp = join(path, "rows");
    for (i, row) in rows.iter().enumerate() {
        if let (Some(cells), Some(n)) = (row.as_array(), expected) {
            if cells.len() != n {
                issues.push(syntactic(
                    IssueCode::RowWidthMismatch,
                    index(&rp, i),
                    format!("row has {} cells, expected {n}", cells.len()),
                ));
            }
        }
    }
}

/// Nested class arrays in the raw JSON, e.g. `groups[0].phases`.
pub fn find_class_nesting(value: &Value) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let nested = [("groups", &["phases", "steps"][..]), ("phases", &["steps"][..])];
    for (array, children) in nested {
        for (i, item) in array_items(value.get(array)) {
            for child in children {
                if item.get(*child).is_some() {
                    issues.push(structural(
                        IssueCode::ClassNesting,
                        join(&index(array, i), child),
                        format!("{child} must be a top-level array, not nested under {array}"),
                    ));
                }
            }
        }
    }
    issues
}

pub fn validate_structural(record: &BmrRecord) -> Vec<ValidationIssue> {
    // Nested arrays survive parsing as unknown keys, so the typed record
    // still carries them.
    let mut issues = find_class_nesting(&record.to_value());

    let groups: HashSet<&str> = record.groups.iter().map(|g| g.id.as_str()).collect();
    let phase_groups: HashMap<&str, &str> = record
        .phases
        .iter()
        .map(|p| (p.id.as_str(), p.group_id.as_str()))
        .collect();

    check_ids(IdKind::Group, "groups", record.groups.iter().map(|g| g.id.as_str()), &mut issues);
    check_ids(IdKind::Phase, "phases", record.phases.iter().map(|p| p.id.as_str()), &mut issues);
    check_ids(IdKind::Step, "steps", record.steps.iter().map(|s| s.id.as_str()), &mut issues);

    for (i, phase) in record.phases.iter().enumerate() {
        if !groups.contains(phase.group_id.as_str()) {
            issues.push(structural(
                IssueCode::DanglingRef,
                join(&index("phases", i), "group_id"),
                format!("no group {:?}", phase.group_id),
            ));
        }
    }
    for (i, step) in record.steps.iter().enumerate() {
        let sp = index("steps", i);
        let phase_group = phase_groups.get(step.phase_id.as_str());
        if phase_group.is_none() {
            issues.push(structural(
                IssueCode::DanglingRef,
                join(&sp, "phase_id"),
                format!("no phase {:?}", step.phase_id),
            ));
        }
        if !groups.contains(step.group_id.as_str()) {
            issues.push(structural(
                IssueCode::DanglingRef,
                join(&sp, "group_id"),
                format!("no group {:?}", step.group_id),
            ));
        } else if let Some(&pg) = phase_group {
            if pg != step.group_id {
                issues.push(structural(
                    IssueCode::GroupMismatch,
                    join(&sp, "group_id"),
                    format!("step is in {:?} but its phase {:?} is in {pg:?}", step.group_id, step.phase_id),
                ));
            }
        }
    }
    issues
}

fn check_ids<'a>(kind: IdKind, array: &str, ids: impl Iterator<Item = &'a str>, issues: &mut Vec<ValidationIssue>) {
    let mut seen = HashSet::new();
    let mut max_suffix = 0;
    for (i, id) in ids.enumerate() {
        let path = join(&index(array, i), "id");
        if !seen.insert(id) {
            issues.push(structural(IssueCode::DupId, path, format!("duplicate id {id:?}")));
            continue;
        }
        let Some(n) = id_suffix(kind, id) else { continue };
        // equal suffixes are duplicates and were reported above
        if n < max_suffix {
            issues.push(ValidationIssue::warning(
                Layer::Structural,
                IssueCode::SeqOrder,
                path,
                format!("{id} follows {}-{max_suffix}", kind.prefix()),
            ));
        }
        max_suffix = max_suffix.max(n);
    }
}

fn compliance_warning(code: IssueCode, path: impl Into<String>, message: impl Into<String>) -> ValidationIssue {
    ValidationIssue::warning(Layer::Compliance, code, path, message)
}

fn compliance_error(code: IssueCode, path: impl Into<String>, message: impl Into<String>) -> ValidationIssue {
    ValidationIssue::error(Layer::Compliance, code, path, message)
}

fn looks_numeric(s: &str) -> bool {
    s.trim().parse::<f64>().is_ok()
}

pub fn validate_compliance(record: &BmrRecord) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();

    for (key, field) in record.header.fields() {
        if field.is_null() {
            issues.push(compliance_warning(
                IssueCode::HeaderGap,
                join("header", key),
                format!("header {key} is not recorded"),
            ));
        }
    }

    let mut typed_fields: Vec<(String, &Field)> = record
        .header
        .fields()
        .into_iter()
        .map(|(k, f)| (join("header", k), f))
        .collect();
    for (i, g) in record.groups.iter().enumerate() {
        typed_fields.push((join(&index("groups", i), "group_name"), &g.group_name));
    }
    for (i, p) in record.phases.iter().enumerate() {
        typed_fields.push((join(&index("phases", i), "phase_name"), &p.phase_name));
    }
    for (i, s) in record.steps.iter().enumerate() {
        typed_fields.push((join(&index("steps", i), "step_name"), &s.step_name));
        typed_fields.push((join(&index("steps", i), "step_type"), &s.step_type));
    }
    for (path, field) in typed_fields {
        if !field.types.contains(&FieldType::PassFail) {
            continue;
        }
        let ok = match &field.value {
            Value::Null => true,
            Value::String(s) => s == "pass" || s == "fail",
            _ => false,
        };
        if !ok {
            issues.push(compliance_error(
                IssueCode::BadPassfail,
                join(&path, "value"),
                format!("pass/fail value {} is not null, \"pass\" or \"fail\"", field.value),
            ));
        }
    }

    for (i, step) in record.steps.iter().enumerate() {
        let sp = index("steps", i);
        let named = match &step.step_name.value {
            Value::Null => false,
            Value::String(s) => !s.trim().is_empty(),
            _ => true,
        };
        if !named {
            issues.push(compliance_error(
                IssueCode::UnnamedStep,
                join(&join(&sp, "step_name"), "value"),
                format!("{} has no name", step.id),
            ));
        }

        for (j, content) in step.content.iter().enumerate() {
            let cp = index(&join(&sp, "content"), j);
            if let Some(calc) = &content.calculation {
                let calc_path = join(&cp, "calculation");
                if calc.formula.trim().is_empty() {
                    issues.push(compliance_error(
                        IssueCode::CalcIncomplete,
                        join(&calc_path, "formula"),
                        "calculation has no formula",
                    ));
                } else if calc.variables.is_empty() {
                    issues.push(compliance_error(
                        IssueCode::CalcIncomplete,
                        join(&calc_path, "variables"),
                        "calculation lists no variables",
                    ));
                }
            }
            if content.kind != ContentKind::DataForm {
                continue;
            }
            for (k, f) in content.fields.iter().flatten().enumerate() {
                let Some(limits) = f.limits.as_deref().filter(|l| !l.trim().is_empty()) else {
                    continue;
                };
                let numeric = match &f.value {
                    Some(v) => looks_numeric(v),
                    None => limits.chars().any(|c| c.is_ascii_digit()),
                };
                let has_unit = f.unit.as_deref().is_some_and(|u| !u.trim().is_empty());
                if numeric && !has_unit {
                    issues.push(compliance_warning(
                        IssueCode::UnitlessLimit,
                        index(&join(&cp, "fields"), k),
                        format!("{:?} carries limits {limits:?} but no unit", f.label),
                    ));
                }
            }
        }
    }

    let (_, refs) = resolve_cross_references(record);
    for r in refs.iter().filter(|r| !r.resolved) {
        issues.push(compliance_warning(
            IssueCode::UnresolvedRef,
            r.source_path.clone(),
            format!("reference {:?} has no target in this record", r.ref_text),
        ));
    }
    issues
}

fn has_error(issues: &[ValidationIssue]) -> bool {
    issues.iter().any(ValidationIssue::is_error)
}

/// Runs syntactic, structural and compliance checks, stopping after the first
/// layer that reports an error.
pub fn validate_all(json_text: &str) -> ValidationReport {
    let mut issues = validate_syntactic(json_text);
    if has_error(&issues) {
        return ValidationReport::from_issues(issues);
    }
    let value: Value = serde_json::from_str(json_text).expect("syntactic layer parsed it");
    let record = match parse_record(&value) {
        Ok(r) => r,
        Err(parse_issues) => {
            issues.extend(parse_issues);
            issues.extend(find_class_nesting(&value));
            return ValidationReport::from_issues(issues);
        }
    };
    issues.extend(validate_record(&record));
    ValidationReport::from_issues(issues)
}

/// Structural then compliance checks on an already-typed record.
pub fn validate_record(record: &BmrRecord) -> Vec<ValidationIssue> {
    let mut issues = validate_structural(record);
    if has_error(&issues) {
        return issues;
    }
    issues.extend(validate_compliance(record));
    issues
}
