mod common;

use std::collections::HashSet;

use batchrec::chunker::{chunk_text_by_tokens, count_tokens, split_sentences, ChunkingConfig, WordTokenizer};
use batchrec::extraction::{mock_extract, ChunkResult};
use batchrec::merge::{merge_chunk_results, resolve_cross_references};
use batchrec::metrics::{composite_score, hierarchy_preservation, WeightVector};
use batchrec::schema::{parse_record, parse_record_str, BmrRecord};
use batchrec::validation::{validate_all, Layer};
use common::{apply, deletions, metric_values, process_fixture, sentence_document, source};
use proptest::prelude::*;
use serde_json::{json, Value};

fn words(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

proptest! {
    #[test]
    fn chunks_respect_budget_and_lose_nothing(
        lengths in prop::collection::vec(1usize..400, 0..25),
        max_tokens in 1usize..300,
        threshold in 1usize..400,
    ) {
        let text = sentence_document(&lengths);
        let cfg = ChunkingConfig::new(max_tokens, threshold).unwrap();
        let tok = WordTokenizer::new();
        let chunks = chunk_text_by_tokens(&text, &cfg, &tok);

        let mut joined = Vec::new();
        for (i, c) in chunks.iter().enumerate() {
            prop_assert_eq!(c.index, i);
            prop_assert!(!c.text.trim().is_empty());
            prop_assert!(c.token_count <= max_tokens);
            prop_assert_eq!(c.token_count, count_tokens(&c.text, &tok));
            joined.extend(words(&c.text));
        }
        prop_assert_eq!(joined, words(&text));
        prop_assert_eq!(chunk_text_by_tokens(&text, &cfg, &tok), chunks);
    }

    #[test]
    fn sentences_are_never_empty(text in "[a-z .!?\n]{0,200}") {
        for s in split_sentences(&text) {
            prop_assert!(!s.trim().is_empty());
        }
        let rejoined: Vec<&str> = split_sentences(&text).into_iter().flat_map(words).collect();
        prop_assert_eq!(rejoined, words(&text));
    }

    #[test]
    fn validation_never_panics_and_short_circuits(text in ".{0,300}") {
        let report = validate_all(&text);
        if serde_json::from_str::<Value>(&text).is_err() {
            prop_assert!(report.issues.iter().all(|i| i.layer == Layer::Syntactic));
            prop_assert!(!report.passed);
        }
    }

    #[test]
    fn composite_stays_within_inputs(
        values in prop::array::uniform10(0.0f64..=100.0),
        weights in prop::array::uniform10(0.0f64..5.0),
    ) {
        prop_assume!(weights.iter().sum::<f64>() > 1e-6);
        let w = WeightVector::from_array(weights);
        let c = composite_score(&values, &w);
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(c >= lo - 1e-9 && c <= hi + 1e-9, "{} not in [{}, {}]", c, lo, hi);
    }
}

fn field(types: &[&str], value: Value) -> Value {
    json!({"type": types, "value": value})
}

prop_compose! {
    fn content()(kind in 0usize..6, text in "[A-Za-z ]{0,20}", n in 1usize..4, extra in any::<bool>()) -> Value {
        let mut c = match kind {
            0 => json!({"type": "paragraph", "text": text}),
            1 => json!({"type": "bullet_list", "text": text, "items": vec![text.clone(); n]}),
            2 => json!({"type": "data_form", "text": text, "fields": (0..n).map(|i| json!({
                "label": format!("Field {i}"), "value": if i % 2 == 0 { Value::Null } else { json!("1.5") },
                "unit": "kg", "limits": "+/- 0.1 kg"
            })).collect::<Vec<_>>()}),
            3 => json!({"type": "table", "text": text, "headers": ["A", "B"],
                "rows": (0..n).map(|i| json!([i, text.clone()])).collect::<Vec<_>>()}),
            4 => json!({"type": "calculation", "text": text, "calculation": {
                "formula": "A x B",
                "variables": [{"name": "A", "description": "first", "value": 2.5, "unit": "kg"}],
                "result": {"value": n, "unit": "kg"}
            }}),
            _ => json!({"type": "image", "text": text}),
        };
        if extra {
            c["confidence"] = json!(0.9);
        }
        c
    }
}

prop_compose! {
    fn record()(steps in prop::collection::vec(prop::collection::vec(content(), 0..4), 0..5),
                name in prop::option::of("[A-Za-z ]{1,20}")) -> Value {
        let header = json!({
            "completion_date": field(&["date"], Value::Null),
            "expiry_date": field(&["date"], Value::Null),
            "name": field(&["text"], name.map(Value::from).unwrap_or(Value::Null)),
            "quantity": field(&["numeric"], json!(100)),
            "sku": field(&["text"], json!("AB-1")),
            "start_date": field(&["date", "timestamp"], Value::Null),
        });
        let steps: Vec<Value> = steps.into_iter().enumerate().map(|(i, content)| json!({
            "id": format!("step-{}", i + 1),
            "phase_id": "phase-1",
            "group_id": "group-1",
            "step_name": field(&["text"], json!(format!("Step {}", i + 1))),
            "step_type": field(&["choice"], Value::Null),
            "content": content,
        })).collect();
        json!({
            "header": header,
            "groups": [{"id": "group-1", "group_name": field(&["text"], json!("General"))}],
            "phases": [{"id": "phase-1", "group_id": "group-1", "phase_name": field(&["text"], json!("General"))}],
            "steps": steps,
        })
    }
}

proptest! {
    #[test]
    fn records_round_trip(v in record()) {
        let parsed = parse_record(&v).unwrap();
        prop_assert_eq!(parsed.to_value(), v.clone());
        let again = parse_record_str(&parsed.to_json_pretty()).unwrap();
        prop_assert_eq!(again, parsed);
    }

    #[test]
    fn merged_ids_are_unique_and_closed(sections in prop::collection::vec(1usize..4, 1..6)) {
        let results: Vec<ChunkResult> = sections.iter().enumerate().map(|(i, &steps)| {
            let mut md = format!("## PART {i}\n### Phase 1: Work {i}\n");
            for s in 1..=steps {
                md.push_str(&format!("**Step {s}:** Task {i} {s}\n- Do item {s}\n\n"));
            }
            let chunk = batchrec::chunker::Chunk { index: i, token_count: 0, text: md };
            ChunkResult {
                index: i,
                record: Some(mock_extract(&chunk)),
                attempts_used: 1,
                issues: Vec::new(),
                failure: None,
                seconds: 0.0,
            }
        }).collect();
        let (merged, issues) = merge_chunk_results(&results).unwrap();
        prop_assert!(issues.is_empty());
        let ids: Vec<&str> = merged.groups.iter().map(|g| g.id.as_str())
            .chain(merged.phases.iter().map(|p| p.id.as_str()))
            .chain(merged.steps.iter().map(|s| s.id.as_str()))
            .collect();
        prop_assert_eq!(ids.iter().collect::<HashSet<_>>().len(), ids.len());
        prop_assert_eq!(hierarchy_preservation(&merged), 100.0);
        prop_assert_eq!(merged.steps.len(), sections.iter().sum::<usize>());
        let (resolved, _) = resolve_cross_references(&merged);
        prop_assert_eq!(resolve_cross_references(&resolved).0, resolved);
    }
}

#[test]
fn single_deletions_never_raise_a_metric() {
    let src = source("sterile_fill.md");
    let golden = process_fixture("sterile_fill.md").record;
    let base = metric_values(&src, &golden);
    let value = golden.to_value();
    let mut checked = 0;
    for d in deletions(&value) {
        let Ok(damaged) = parse_record(&apply(&value, &d)) else { continue };
        checked += 1;
        for ((name, before), (_, after)) in base.iter().zip(metric_values(&src, &damaged)) {
            assert!(after <= before + 1e-9, "{name} rose from {before} to {after} after {d:?}");
        }
    }
    assert!(checked > 100, "{checked}");
}

#[test]
fn empty_record_parses() {
    let v = BmrRecord::empty().to_value();
    assert_eq!(parse_record(&v).unwrap(), BmrRecord::empty());
}
