//! Source-side detectors. Each one finds the items a metric expects to see
//! preserved, so its output is that metric's denominator.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;

use crate::chunker::split_sentences;

/// Units recognized in `number unit` pairs.
pub const UNIT_LEXICON: [&str; 15] = [
    "kg", "g", "mg", "mcg", "L", "ml", "mL", "rpm", "%", "°C", "C", "minutes", "min", "hours", "mesh",
];

pub fn is_unit(token: &str) -> bool {
    UNIT_LEXICON.contains(&token)
}

fn re(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).unwrap())
}

fn conditional() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"(?i)\b(?:if|when|unless|otherwise)\b")
}

pub fn is_conditional(text: &str) -> bool {
    conditional().is_match(text)
}

fn unit_pair() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"(\d+(?:\.\d+)?)\s?(°C|%|kg|mcg|mg|g|mL|ml|L|rpm|minutes|min|hours|mesh|C)")
}

/// `50.0` and `50` compare equal; non-numbers pass through trimmed.
pub fn canonical_number(s: &str) -> String {
    match s.trim().parse::<f64>() {
        Ok(f) if f.is_finite() => format!("{f}"),
        _ => s.trim().to_string(),
    }
}

pub fn canonical_unit(u: &str) -> String {
    match u {
        "mL" | "ml" => "ml".into(),
        "L" => "l".into(),
        "°C" | "C" => "c".into(),
        "minutes" | "min" => "min".into(),
        other => other.to_lowercase(),
    }
}

/// `(number, unit)` pairs written as `50.0 kg`, `500mg`, `95%`.
pub fn unit_pairs(text: &str) -> Vec<(String, String)> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    for c in unit_pair().captures_iter(text) {
        let num = c.get(1).unwrap();
        let unit = c.get(2).unwrap();
        if num.start() > 0 {
            let prev = bytes[num.start() - 1];
            if prev.is_ascii_alphanumeric() || matches!(prev, b'.' | b'-' | b'_') {
                continue;
            }
        }
        let next = text[unit.end()..].chars().next();
        if next.is_some_and(|ch| ch.is_alphanumeric()) {
            continue;
        }
        out.push((canonical_number(num.as_str()), canonical_unit(unit.as_str())));
    }
    out
}

/// Sentences further split at line breaks; the unit of sentence-level
/// coverage.
pub fn text_units(text: &str) -> Vec<&str> {
    split_sentences(text)
        .into_iter()
        .flat_map(str::lines)
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect()
}

fn boilerplate() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"(?i)\bpage\s+\d+\s+of\s+\d+\b|\bperformed\s+by\b|\bdate\s*:\s*_{3,}")
}

pub fn is_boilerplate(unit: &str) -> bool {
    boilerplate().is_match(unit)
}

fn bold_step() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"(?i)^\s*\*\*\s*step\s+\d+[a-z]?\s*:?\s*\*\*\s*:?\s*(.*)$")
}

/// Names of `**Step N:** Name` headings in document order.
pub fn step_headings(text: &str) -> Vec<String> {
    text.lines()
        .filter_map(|l| bold_step().captures(l))
        .map(|c| c[1].replace("**", "").trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn blank() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"_{3,}")
}

fn bullet(line: &str) -> Option<&str> {
    let t = line.trim_start();
    t.strip_prefix("- ").or_else(|| t.strip_prefix("* ")).or_else(|| t.strip_prefix("+ "))
}

fn bold_label(line: &str) -> Option<String> {
    let t = line.trim_start().strip_prefix("**")?;
    let end = t.find("**")?;
    Some(t[..end].trim().trim_end_matches(':').trim().to_ascii_lowercase())
}

fn is_structural(line: &str) -> bool {
    line.trim_start().starts_with('#')
        || bold_label(line).is_some_and(|l| l == "calculation" || bold_step().is_match(line))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceCalculation {
    pub formula: String,
    pub variables: Vec<String>,
}

/// `**Calculation:**` blocks and free-standing `Formula:` blocks. A block
/// runs to the next blank or structural line.
pub fn calculations(text: &str) -> Vec<SourceCalculation> {
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        let starts_calc = bold_label(line).is_some_and(|l| l == "calculation");
        let starts_formula = formula_of(line).is_some();
        if !starts_calc && !starts_formula {
            i += 1;
            continue;
        }
        let mut calc = SourceCalculation {
            formula: formula_of(line).unwrap_or_default(),
            variables: Vec::new(),
        };
        i += 1;
        while i < lines.len() && !lines[i].trim().is_empty() && !is_structural(lines[i]) {
            if let Some(f) = formula_of(lines[i]) {
                calc.formula = f;
            } else if let Some((label, _)) = bullet(lines[i]).and_then(|b| b.split_once(':')) {
                calc.variables.push(label.trim().to_string());
            }
            i += 1;
        }
        out.push(calc);
    }
    out
}

fn formula_of(line: &str) -> Option<String> {
    let t = line.trim().replace("**", "");
    let (k, v) = t.split_once(':')?;
    k.trim().eq_ignore_ascii_case("formula").then(|| v.trim().to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFormLine {
    pub label: String,
    /// `None` for a blank (`____`) entry.
    pub value: Option<String>,
}

fn form_value(rest: &str) -> Option<String> {
    let rest = rest.trim();
    if rest.is_empty() || blank().find(rest).is_some_and(|m| m.start() == 0) {
        return None;
    }
    let first = rest.split_whitespace().next().unwrap_or(rest);
    if first.parse::<f64>().is_ok() {
        Some(first.to_string())
    } else {
        Some(rest.to_string())
    }
}

fn valid_label(label: &str) -> bool {
    !label.is_empty() && label.len() <= 80 && !label.ends_with('.') && !label.contains('[')
}

/// `- Label: value` and `- Label: ____` bullets inside step bodies, outside
/// calculation blocks. Lines with several blanks yield one entry per blank.
pub fn form_lines(text: &str) -> Vec<SourceFormLine> {
    let mut out = Vec::new();
    let mut in_step = false;
    let mut in_calc = false;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            in_calc = false;
            continue;
        }
        if trimmed.starts_with('#') {
            in_step = false;
            in_calc = false;
            continue;
        }
        if bold_step().is_match(line) {
            in_step = true;
            in_calc = false;
            continue;
        }
        if bold_label(line).is_some_and(|l| l == "calculation") || formula_of(line).is_some() {
            in_calc = true;
            continue;
        }
        if !in_step || in_calc {
            continue;
        }
        let Some(body) = bullet(line) else { continue };
        let body = body.replace("**", "");
        let blanks = blank().find_iter(&body).count();
        if blanks >= 2 {
            let parts: Vec<&str> = blank().split(&body).collect();
            for (k, part) in parts.iter().enumerate().take(parts.len() - 1) {
                let mut p = part.trim();
                if k > 0 {
                    let (first, rest) = p.split_once(char::is_whitespace).unwrap_or((p, ""));
                    if is_unit(first) {
                        p = rest.trim();
                    }
                }
                let label = p.trim_end_matches(':').trim();
                if valid_label(label) {
                    out.push(SourceFormLine {
                        label: label.to_string(),
                        value: None,
                    });
                }
            }
            continue;
        }
        let Some((label, rest)) = body.split_once(':') else { continue };
        let label = label.trim();
        if valid_label(label) {
            out.push(SourceFormLine {
                label: label.to_string(),
                value: form_value(rest),
            });
        }
    }
    out
}

/// Header cells of each markdown pipe table.
pub fn table_headers(text: &str) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut in_table = false;
    for line in text.lines() {
        let t = line.trim();
        if !t.starts_with('|') {
            in_table = false;
            continue;
        }
        if in_table {
            continue;
        }
        in_table = true;
        let inner = t.trim_start_matches('|').trim_end_matches('|');
        out.push(inner.split('|').map(|c| c.trim().to_string()).collect());
    }
    out
}

const STOPWORDS: [&str; 30] = [
    "the", "an", "and", "or", "of", "to", "in", "on", "for", "with", "by", "at", "from", "into", "is", "are", "be",
    "as", "this", "that", "it", "its", "all", "any", "each", "per", "was", "were", "has", "have",
];

/// Lowercases, strips punctuation except between digits, splits on
/// whitespace and drops tokens shorter than two characters.
pub fn normalize_words(text: &str) -> BTreeSet<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut cleaned = String::with_capacity(text.len());
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() || c.is_whitespace() {
            cleaned.extend(c.to_lowercase());
        } else {
            let between_digits = i > 0
                && chars[i - 1].is_ascii_digit()
                && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
            if between_digits {
                cleaned.push(c);
            }
        }
    }
    cleaned
        .split_whitespace()
        .filter(|w| w.chars().count() >= 2)
        .map(str::to_string)
        .collect()
}

/// Content words after canonicalization: stopwords dropped, numbers in
/// canonical form, unit and multiplication-sign synonyms unified.
pub fn content_words(text: &str) -> BTreeSet<String> {
    let text = text.replace(['×', '*'], " x ");
    normalize_words(&text)
        .into_iter()
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .map(|w| match w.as_str() {
            "minutes" | "minute" | "mins" => "min".to_string(),
            "hours" | "hour" | "hrs" => "hr".to_string(),
            "millilitres" | "milliliters" => "ml".to_string(),
            _ if w.starts_with(|c: char| c.is_ascii_digit()) => canonical_number(&w),
            _ => w,
        })
        .collect()
}
