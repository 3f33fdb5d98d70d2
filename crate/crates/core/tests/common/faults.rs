//! One seeded fault per validator code, each applied to a clean record.

use serde_json::{json, Value};

use super::fixture_json;

pub struct Seed {
    pub code: &'static str,
    pub path: &'static str,
    pub seed: fn(&Value) -> String,
}

/// The worked example output with every header field filled in, so that it
/// raises no issue of any severity.
pub fn clean_record() -> Value {
    let mut v = fixture_json("acetaminophen.json");
    v["header"]["completion_date"]["value"] = json!("2024-03-16");
    v["header"]["expiry_date"]["value"] = json!("2026-03-15");
    v["header"]["quantity"]["value"] = json!(100000);
    v
}

fn edit(v: &Value, f: impl FnOnce(&mut Value)) -> String {
    let mut v = v.clone();
    f(&mut v);
    serde_json::to_string_pretty(&v).unwrap()
}

fn add_group(v: &mut Value, id: &str) {
    v["groups"]
        .as_array_mut()
        .unwrap()
        .push(json!({"id": id, "group_name": {"type": ["text"], "value": "Packaging"}}));
}

pub const SEEDS: &[Seed] = &[
    Seed {
        code: "JSON_MALFORMED",
        path: "$",
        seed: |v| {
            let text = serde_json::to_string(v).unwrap();
            format!("{},}}", &text[..text.len() - 1])
        },
    },
    Seed {
        code: "BAD_FIELD_TYPE",
        path: "header.name.type[0]",
        seed: |v| edit(v, |v| v["header"]["name"]["type"] = json!(["string"])),
    },
    Seed {
        code: "BAD_CONTENT_KIND",
        path: "steps[1].content[0].type",
        seed: |v| edit(v, |v| v["steps"][1]["content"][0]["type"] = json!("heading")),
    },
    Seed {
        code: "ROW_WIDTH_MISMATCH",
        path: "steps[0].content[1].rows[1]",
        seed: |v| {
            edit(v, |v| {
                v["steps"][0]["content"].as_array_mut().unwrap().push(json!({
                    "type": "table",
                    "text": "Equipment",
                    "headers": ["Equipment", "ID Number", "Calibration Due"],
                    "rows": [["V-Blender", "VB-105", "2024-04-20"], ["Tablet Press", "TP-203"]]
                }))
            })
        },
    },
    Seed {
        code: "CODE_SYNTAX_RESIDUE",
        path: "steps[0].step_name.value",
        seed: |v| edit(v, |v| v["steps"][0]["step_name"]["value"] = json!("new Field(\"text\", \"Weigh\")")),
    },
    Seed {
        code: "MISSING_FIELD",
        path: "steps[2].step_type",
        seed: |v| {
            edit(v, |v| {
                v["steps"][2].as_object_mut().unwrap().remove("step_type");
            })
        },
    },
    Seed {
        code: "BAD_ID_FORMAT",
        path: "steps[1].id",
        seed: |v| edit(v, |v| v["steps"][1]["id"] = json!("s2")),
    },
    Seed {
        code: "CLASS_NESTING",
        path: "groups[0].phases",
        seed: |v| {
            edit(v, |v| {
                let phases = v["phases"].clone();
                v["groups"][0]["phases"] = phases;
            })
        },
    },
    Seed {
        code: "DUP_ID",
        path: "groups[1].id",
        seed: |v| edit(v, |v| add_group(v, "group-1")),
    },
    Seed {
        code: "DANGLING_REF",
        path: "steps[2].phase_id",
        seed: |v| edit(v, |v| v["steps"][2]["phase_id"] = json!("phase-9")),
    },
    Seed {
        code: "GROUP_MISMATCH",
        path: "steps[2].group_id",
        seed: |v| {
            edit(v, |v| {
                add_group(v, "group-2");
                v["steps"][2]["group_id"] = json!("group-2");
            })
        },
    },
    Seed {
        code: "SEQ_ORDER",
        path: "phases[1].id",
        seed: |v| edit(v, |v| v["phases"].as_array_mut().unwrap().swap(0, 1)),
    },
    Seed {
        code: "CALC_INCOMPLETE",
        path: "steps[2].content[1].calculation.formula",
        seed: |v| edit(v, |v| v["steps"][2]["content"][1]["calculation"]["formula"] = json!("")),
    },
    Seed {
        code: "UNITLESS_LIMIT",
        path: "steps[0].content[0].fields[0]",
        seed: |v| {
            edit(v, |v| {
                v["steps"][0]["content"][0]["fields"][0].as_object_mut().unwrap().remove("unit");
            })
        },
    },
    Seed {
        code: "UNNAMED_STEP",
        path: "steps[1].step_name.value",
        seed: |v| edit(v, |v| v["steps"][1]["step_name"]["value"] = json!("")),
    },
    Seed {
        code: "HEADER_GAP",
        path: "header.sku",
        seed: |v| edit(v, |v| v["header"]["sku"]["value"] = Value::Null),
    },
    Seed {
        code: "UNRESOLVED_REF",
        path: "steps[1].content[2]",
        seed: |v| {
            edit(v, |v| {
                v["steps"][1]["content"]
                    .as_array_mut()
                    .unwrap()
                    .push(json!({"type": "note", "text": "Clean the screen per SOP-10432."}))
            })
        },
    },
    Seed {
        code: "BAD_PASSFAIL",
        path: "steps[1].step_type.value",
        seed: |v| {
            edit(v, |v| {
                v["steps"][1]["step_type"] = json!({"type": ["pass_fail"], "value": "maybe"});
            })
        },
    },
];
