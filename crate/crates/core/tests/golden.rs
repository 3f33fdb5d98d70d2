mod common;

use std::collections::BTreeSet;
use std::process::Command;

use batchrec::metrics::{self, Status};
use batchrec::schema::{parse_record, parse_record_str};
use batchrec::validation::validate_all;
use common::{fixture, fixture_json, fixture_text, metric_values, process_fixture, source};
use serde_json::Value;

/// Key paths with array indices dropped, e.g. `steps.content.fields.label`.
fn key_paths(v: &Value, prefix: &str, out: &mut BTreeSet<String>) {
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                out.insert(p.clone());
                key_paths(child, &p, out);
            }
        }
        Value::Array(items) => items.iter().for_each(|c| key_paths(c, prefix, out)),
        _ => {}
    }
}

#[test]
fn worked_example_output_parses_and_validates() {
    let expected = fixture_json("acetaminophen.json");
    let record = parse_record(&expected).unwrap();
    assert_eq!((record.groups.len(), record.phases.len(), record.steps.len()), (1, 2, 3));
    assert_eq!(record.to_value(), expected);
    let report = validate_all(&fixture_text("acetaminophen.json"));
    assert!(report.passed);
    let gaps: Vec<&str> = report.issues.iter().map(|i| i.path.as_str()).collect();
    assert_eq!(gaps, ["header.completion_date", "header.expiry_date", "header.quantity"]);
}

#[test]
fn mock_reproduces_worked_example() {
    let out = process_fixture("acetaminophen.md");
    let got = out.record.to_value();
    let expected = fixture_json("acetaminophen.json");

    let (mut want_keys, mut got_keys) = (BTreeSet::new(), BTreeSet::new());
    key_paths(&expected, "", &mut want_keys);
    key_paths(&got, "", &mut got_keys);
    assert!(want_keys.is_subset(&got_keys), "{:?}", want_keys.difference(&got_keys).collect::<Vec<_>>());

    assert_eq!(got["header"], expected["header"]);
    assert_eq!(got["groups"], expected["groups"]);
    assert_eq!(got["phases"], expected["phases"]);
    for key in ["id", "phase_id", "group_id", "step_name"] {
        for i in 0..3 {
            assert_eq!(got["steps"][i][key], expected["steps"][i][key], "steps[{i}].{key}");
        }
    }
    let step2 = &got["steps"][1]["content"];
    assert_eq!(step2[0], expected["steps"][1]["content"][0]);
    assert_eq!(step2[2], expected["steps"][1]["content"][1]);

    let form = &got["steps"][0]["content"][1];
    assert_eq!(form["type"], "data_form");
    assert_eq!(form["fields"][0], expected["steps"][0]["content"][0]["fields"][0]);
    assert_eq!(form["fields"][1], expected["steps"][0]["content"][0]["fields"][1]);

    let calc = &got["steps"][2]["content"][1];
    let want = &expected["steps"][2]["content"][1];
    assert_eq!(calc["text"], want["text"]);
    let (c, w) = (&calc["calculation"], &want["calculation"]);
    assert_eq!(c["formula"], "(Acetaminophen + Excipients) x 0.98");
    assert_eq!(c["result"], w["result"]);
    assert_eq!(c["notes"], w["notes"]);
    for i in 0..2 {
        for key in ["name", "value", "unit"] {
            assert_eq!(c["variables"][i][key], w["variables"][i][key]);
        }
    }
    assert!(out.validation.passed);
}

#[test]
fn worked_example_structural_metrics() {
    let out = process_fixture("acetaminophen.md");
    let m = &out.metrics;
    for (name, v) in [
        ("hierarchy", m.hierarchy_preservation),
        ("sequence", m.sequence_preservation),
        ("cross_reference", m.cross_reference_integrity),
        ("calculation", m.calculation_fidelity),
        ("conditional", m.conditional_logic_fidelity),
        ("unit", m.unit_fidelity),
        ("table", m.table_preservation),
        ("image", m.image_preservation),
    ] {
        assert_eq!(v, 100.0, "{name}");
    }
    assert_eq!(m.document_stats.tables, 1);
    assert_eq!(m.document_stats.images, 1);
}

// 80 of 91 source words, from tests/oracles/crude_coverage.py.
#[test]
fn worked_example_crude_coverage_constant() {
    let out = process_fixture("acetaminophen.md");
    let v = metrics::crude_word_coverage(&source("acetaminophen.md"), &out.record);
    assert!((v - 100.0 * 80.0 / 91.0).abs() < 1e-9, "{v}");
}

// 137 of 150 source words, from tests/oracles/crude_coverage.py.
#[test]
fn sterile_fill_crude_coverage_constant() {
    let out = process_fixture("sterile_fill.md");
    let v = metrics::crude_word_coverage(&source("sterile_fill.md"), &out.record);
    assert!((v - 100.0 * 137.0 / 150.0).abs() < 1e-9, "{v}");
}

#[test]
fn sterile_fill_end_to_end() {
    let out = process_fixture("sterile_fill.md");
    let r = &out.record;
    assert_eq!((r.groups.len(), r.phases.len(), r.steps.len()), (2, 3, 5));
    assert!(out.validation.passed, "{:#?}", out.validation.issues);
    let calcs: Vec<&str> = r
        .contents()
        .filter_map(|(_, c)| c.calculation.as_ref())
        .map(|c| c.formula.as_str())
        .collect();
    assert_eq!(calcs, ["Volume x 9.0", "Volume / Fill"]);
    let src = source("sterile_fill.md");
    for (name, v) in metric_values(&src, r) {
        if !matches!(name, "crude_word_coverage" | "context_aware_coverage" | "field_accuracy") {
            assert_eq!(v, 100.0, "{name}");
        }
    }
    assert_eq!(out.metrics.table_preservation, 100.0);
    assert_eq!(out.metrics.image_preservation, 100.0);
    assert_eq!(metrics::status_for(out.metrics.composite), Status::Excellent);
}

#[test]
fn processed_record_round_trips() {
    for name in ["acetaminophen.md", "sterile_fill.md"] {
        let out = process_fixture(name);
        let reparsed = parse_record_str(&out.record_json).unwrap();
        assert_eq!(reparsed, out.record, "{name}");
    }
}

fn batchrec(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_batchrec")).args(args).output().unwrap()
}

#[test]
fn cli_process_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rec.json");
    let input = fixture("acetaminophen.md");
    let res = batchrec(&["process", input.to_str().unwrap(), "--mock", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    for name in ["rec.json", "rec.validation.json", "rec.metrics.json", "rec.summary.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(written["steps"].as_array().unwrap().len(), 3);
    let metrics: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rec.metrics.json")).unwrap()).unwrap();
    assert!(metrics["composite"].as_f64().unwrap() > 85.0);
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };

    let clean = write("clean.json", &fixture_text("acetaminophen.json"));
    assert_eq!(batchrec(&["validate", &clean]).status.code(), Some(0));

    let mut broken = fixture_json("acetaminophen.json");
    broken["steps"][2]["phase_id"] = "phase-9".into();
    let broken = write("broken.json", &broken.to_string());
    assert_eq!(batchrec(&["validate", &broken]).status.code(), Some(1));

    let missing = dir.path().join("absent.json");
    assert_eq!(batchrec(&["validate", missing.to_str().unwrap()]).status.code(), Some(2));

    let empty = write("empty.md", "");
    assert_eq!(batchrec(&["process", &empty, "--mock"]).status.code(), Some(2));

    let md = fixture("acetaminophen.md");
    let bad_cfg = write("bad.json", "{\"max_tokens\": 0}");
    let res = batchrec(&["process", md.to_str().unwrap(), "--mock", "--config", &bad_cfg]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn cli_chunk_and_score() {
    let md = fixture("sterile_fill.md");
    let res = batchrec(&["chunk", md.to_str().unwrap(), "--max-tokens", "40", "--hard-split-threshold", "40"]);
    assert_eq!(res.status.code(), Some(0));
    let chunks: Value = serde_json::from_slice(&res.stdout).unwrap();
    let chunks = chunks.as_array().unwrap();
    assert!(chunks.len() > 1);
    assert!(chunks.iter().all(|c| c["token_count"].as_u64().unwrap() <= 40));

    let dir = tempfile::tempdir().unwrap();
    let metrics_out = dir.path().join("m.json");
    let rec = fixture("acetaminophen.json");
    let res = batchrec(&[
        "score",
        fixture("acetaminophen.md").to_str().unwrap(),
        rec.to_str().unwrap(),
        "--metrics-out",
        metrics_out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&res.stdout).contains("Composite Confidence Score"));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(metrics_out).unwrap()).unwrap();
    assert_eq!(m["hierarchy_preservation"], 100.0);
}
