use std::sync::OnceLock;

use regex::{Captures, Regex};

use crate::chunker::Chunk;
use crate::validation::ValidationIssue;

const FIRST_CHUNK_TEMPLATE: &str = include_str!("../../assets/first_chunk_prompt.txt");

fn placeholder() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{(chunk_number|total_chunks|mbr|template)\}").unwrap())
}

/// Fills the extraction template for one chunk. Later chunks get one extra
/// line telling the model where group numbering continues.
pub fn build_prompt(
    chunk: &Chunk,
    chunk_number: usize,
    total_chunks: usize,
    schema_text: &str,
    last_group_id: u64,
) -> String {
    let mut prompt = placeholder()
        .replace_all(FIRST_CHUNK_TEMPLATE, |c: &Captures| match &c[1] {
            "chunk_number" => chunk_number.to_string(),
            "total_chunks" => total_chunks.to_string(),
            "mbr" => chunk.text.clone(),
            _ => schema_text.to_string(),
        })
        .into_owned();
    if chunk_number > 1 {
        prompt.push_str(&format!(
            "\nThis chunk continues the same batch record: number new groups \
             starting from group-{} and keep phase and step ids unique within this chunk.\n",
            last_group_id + 1
        ));
    }
    prompt
}

/// Appends the previous attempt's problems so the model can correct them.
pub fn repair_prompt(base: &str, issues: &[ValidationIssue]) -> String {
    let mut out = String::with_capacity(base.len() + 64 * issues.len());
    out.push_str(base);
    out.push_str("\n\nYour previous response could not be used. Fix these problems and answer again:\n");
    for issue in issues {
        out.push_str(&format!("- {} at {}: {}\n", issue.code, issue.path, issue.message));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validation::{IssueCode, Layer};

    fn chunk(text: &str) -> Chunk {
        Chunk {
            index: 0,
            token_count: 0,
            text: text.into(),
        }
    }

    #[test]
    fn first_chunk_prompt() {
        let p = build_prompt(&chunk("# BATCH MANUFACTURING RECORD"), 1, 2, "class Header {}", 0);
        assert!(p.starts_with("Please convert the following manufacturing batch record \n(chunk 1 of 2)"));
        assert!(p.contains("Wrap your response in <json></json>"));
        assert!(p.contains("Do NOT nest phases inside groups"));
        assert!(p.contains("- Manufacturing Batch Record: # BATCH MANUFACTURING RECORD\n"));
        assert!(p.contains("- Template Structure: class Header {}\n"));
        assert!(p.contains("\"header\": {general information about the document}"));
        assert!(!p.contains("group-1"));
    }

    #[test]
    fn continuation_names_next_group() {
        let p = build_prompt(&chunk("x"), 2, 2, "t", 3);
        assert!(p.trim_end().ends_with("keep phase and step ids unique within this chunk."));
        assert!(p.contains("starting from group-4"));
    }

    #[test]
    fn chunk_text_is_not_reinterpreted() {
        let p = build_prompt(&chunk("literal {template} here"), 1, 1, "SCHEMA", 0);
        assert!(p.contains("literal {template} here"));
    }

    #[test]
    fn repair_lists_issues() {
        let issue = ValidationIssue::error(Layer::Syntactic, IssueCode::JsonMalformed, "$", "bad");
        let p = repair_prompt("base", &[issue]);
        assert!(p.starts_with("base"));
        assert!(p.contains("- JSON_MALFORMED at $: bad"));
    }
}
