//! Deterministic rule-based extraction used by the mock backend.
//!
//! Recognized conventions:
//!
//! | source                                   | record                         |
//! |------------------------------------------|--------------------------------|
//! | `# Title`                                | header name (fallback)         |
//! | `**Product:**`, `**Batch Number:**`, ... | header slots                   |
//! | `## SECTION NAME`                        | group named `Section`          |
//! | `### Phase N: Name`                      | phase                          |
//! | `**Step N:** Name`                       | step                           |
//! | pipe table                               | `table` content                |
//! | bullets with `____` blanks               | `data_form` fields             |
//! | `**Calculation:**` block                 | `calculation` content          |
//! | `[Image Text: ...]`                      | `image` content                |
//! | other bullets / numbered items           | `bullet_list` / `numbered_list`|
//!
//! Groups materialize only once a phase or step appears under them. Content
//! seen before the first step of a chunk is attached to that step.

use std::sync::OnceLock;

use regex::Regex;
use serde_json::{Map, Number, Value};

use crate::chunker::Chunk;
use crate::ingest::find_image_markers;
use crate::metrics::detect::{is_conditional, is_unit};
use crate::schema::{
    BmrRecord, CalcResult, Calculation, Content, ContentKind, Field, FieldType, FormField, Group, IdKind, Link,
    Phase, Step, Variable,
};

const PLACEHOLDER: char = '\u{e000}';

fn re(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).unwrap())
}

fn bold_label() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"^\*\*([^*]+?):?\*\*:?\s*(.*)$")
}

fn step_label() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"(?i)^step\s+\d+[a-z]?$")
}

fn phase_heading() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"(?i)^phase\s+\d+[a-z]?\s*[:.\-]\s*(.+)$")
}

fn blank_run() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"_{3,}")
}

fn number_prefix() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"^([-+]?\d+(?:\.\d+)?)([%°A-Za-z]+)?(?:\s+(.*))?$")
}

fn numbered_item() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"^\d+[.)]\s+(.*)$")
}

fn link_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"^\[([^\]]+)\]\(([^)\s]+)\)$")
}

fn operand() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    re(&RE, r"[A-Za-z][A-Za-z_]*")
}

/// Replaces each image marker with a placeholder carrying its ordinal so
/// multi-line markers collapse onto one line.
fn mask_images(text: &str) -> (String, Vec<String>) {
    let scan = find_image_markers(text);
    if scan.markers.is_empty() {
        return (text.to_string(), Vec::new());
    }
    let mut out = String::with_capacity(text.len());
    let mut markers = scan.markers.iter().enumerate().peekable();
    let mut skip_until = None;
    for (ci, ch) in text.chars().enumerate() {
        if let Some(end) = skip_until {
            if ci < end {
                continue;
            }
            skip_until = None;
        }
        if let Some((n, m)) = markers.peek() {
            if m.start == ci {
                out.push(PLACEHOLDER);
                out.push_str(&n.to_string());
                out.push(PLACEHOLDER);
                skip_until = Some(m.end);
                markers.next();
                continue;
            }
        }
        out.push(ch);
    }
    (out, scan.markers.into_iter().map(|m| m.inner_text).collect())
}

/// Splits a line into image ordinals and the text around them.
fn split_images(line: &str) -> (Vec<usize>, String) {
    let mut ids = Vec::new();
    let mut rest = String::new();
    let mut parts = line.split(PLACEHOLDER);
    if let Some(first) = parts.next() {
        rest.push_str(first);
    }
    while let (Some(id), Some(after)) = (parts.next(), parts.next()) {
        if let Ok(n) = id.parse() {
            ids.push(n);
        }
        rest.push_str(after);
    }
    (ids, rest.split_whitespace().collect::<Vec<_>>().join(" "))
}

fn bullet_body(line: &str) -> Option<&str> {
    let t = line.trim_start();
    t.strip_prefix("- ")
        .or_else(|| t.strip_prefix("* "))
        .or_else(|| t.strip_prefix("+ "))
        .or_else(|| (t == "-" || t == "*").then_some(""))
}

fn title_first_word(s: &str) -> String {
    let word = s
        .split(|c: char| !c.is_alphanumeric())
        .find(|w| !w.is_empty())
        .unwrap_or("General");
    let mut chars = word.chars();
    let first = chars.next().map(|c| c.to_uppercase().collect::<String>()).unwrap_or_default();
    first + &chars.as_str().to_lowercase()
}

fn strip_bold(s: &str) -> String {
    s.replace("**", "").trim().to_string()
}

fn json_number(s: &str) -> Option<Value> {
    if let Ok(i) = s.parse::<i64>() {
        return Some(Value::from(i));
    }
    let f: f64 = s.parse().ok()?;
    Number::from_f64(f).map(Value::Number)
}

/// `value unit limits` split of the text after a form label.
#[derive(Debug, Default, PartialEq)]
struct ValueParts {
    value: Option<String>,
    unit: Option<String>,
    rest: Option<String>,
}

fn split_unit(text: &str) -> (Option<String>, Option<String>) {
    let text = text.trim();
    if text.is_empty() {
        return (None, None);
    }
    let (first, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
    if is_unit(first) {
        let rest = rest.trim();
        (Some(first.to_string()), (!rest.is_empty()).then(|| rest.to_string()))
    } else {
        (None, Some(text.to_string()))
    }
}

fn parse_value(text: &str) -> ValueParts {
    let text = text.trim();
    if text.is_empty() {
        return ValueParts::default();
    }
    if let Some(m) = blank_run().find(text).filter(|m| m.start() == 0) {
        let (unit, rest) = split_unit(&text[m.end()..]);
        return ValueParts { value: None, unit, rest };
    }
    if let Some(c) = number_prefix().captures(text) {
        let glued = c.get(2).map(|g| g.as_str());
        if glued.is_none_or(is_unit) {
            let tail = c.get(3).map_or("", |t| t.as_str());
            let (unit, rest) = match glued {
                Some(u) => (Some(u.to_string()), (!tail.trim().is_empty()).then(|| tail.trim().to_string())),
                None => split_unit(tail),
            };
            return ValueParts {
                value: Some(c[1].to_string()),
                unit,
                rest,
            };
        }
    }
    ValueParts {
        value: Some(text.to_string()),
        unit: None,
        rest: None,
    }
}

fn split_label(item: &str) -> Option<(&str, &str)> {
    let (label, rest) = item.split_once(':')?;
    let label = label.trim();
    let ok = !label.is_empty() && label.len() <= 80 && !label.contains(PLACEHOLDER) && !label.ends_with('.');
    ok.then_some((label, rest))
}

fn form_fields(item: &str) -> Option<Vec<FormField>> {
    let item = strip_bold(item);
    let blanks = blank_run().find_iter(&item).count();
    if blanks >= 2 {
        let parts: Vec<&str> = blank_run().split(&item).collect();
        let mut fields: Vec<FormField> = Vec::new();
        for (k, part) in parts.iter().enumerate() {
            let mut text = part.trim();
            if k > 0 {
                let (first, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
                if is_unit(first) {
                    if let Some(prev) = fields.last_mut() {
                        prev.unit = Some(first.to_string());
                    }
                    text = rest.trim();
                }
            }
            if k + 1 == parts.len() {
                break;
            }
            let label = text.trim_end_matches(':').trim();
            if label.is_empty() {
                return None;
            }
            fields.push(FormField::new(label, None));
        }
        return Some(fields);
    }
    let (label, rest) = split_label(&item)?;
    let parts = parse_value(rest);
    let mut f = FormField::new(label, parts.value);
    f.unit = parts.unit;
    f.limits = parts.rest;
    Some(vec![f])
}

struct Builder {
    record: BmrRecord,
    h1: Option<String>,
    pending_group: Option<String>,
    group: Option<String>,
    phase: Option<String>,
    step: Option<usize>,
    orphans: Vec<Content>,
    heading: Option<String>,
    images: Vec<String>,
}

impl Builder {
    fn new(images: Vec<String>) -> Self {
        Self {
            record: BmrRecord::empty(),
            h1: None,
            pending_group: None,
            group: None,
            phase: None,
            step: None,
            orphans: Vec::new(),
            heading: None,
            images,
        }
    }

    fn ensure_group(&mut self) -> String {
        if let Some(g) = &self.group {
            return g.clone();
        }
        let name = self.pending_group.take().unwrap_or_else(|| "General".into());
        let id = IdKind::Group.format(self.record.groups.len() as u64 + 1);
        self.record.groups.push(Group {
            id: id.clone(),
            group_name: Field::text(name),
            extra: Map::new(),
        });
        self.group = Some(id.clone());
        id
    }

    fn add_phase(&mut self, name: String) {
        let group_id = self.ensure_group();
        let id = IdKind::Phase.format(self.record.phases.len() as u64 + 1);
        self.record.phases.push(Phase {
            id: id.clone(),
            group_id,
            phase_name: Field::text(name),
            extra: Map::new(),
        });
        self.phase = Some(id);
    }

    fn ensure_phase(&mut self) -> String {
        if self.phase.is_none() {
            let group_id = self.ensure_group();
            let name = self
                .record
                .groups
                .iter()
                .find(|g| g.id == group_id)
                .and_then(|g| g.group_name.as_str())
                .unwrap_or("General")
                .to_string();
            self.add_phase(name);
        }
        self.phase.clone().expect("phase just ensured")
    }

    fn add_step(&mut self, name: String) {
        let phase_id = self.ensure_phase();
        let group_id = self.group.clone().expect("phase implies group");
        let id = IdKind::Step.format(self.record.steps.len() as u64 + 1);
        let content = if self.record.steps.is_empty() {
            std::mem::take(&mut self.orphans)
        } else {
            Vec::new()
        };
        self.record.steps.push(Step {
            id,
            phase_id,
            group_id,
            step_name: Field::text(name),
            step_type: Field::null(FieldType::Text),
            content,
            extra: Map::new(),
        });
        self.step = Some(self.record.steps.len() - 1);
    }

    fn push(&mut self, content: Content) {
        match self.step {
            Some(i) => self.record.steps[i].content.push(content),
            None => self.orphans.push(content),
        }
    }

    fn push_images(&mut self, ids: &[usize]) {
        for &n in ids {
            if let Some(text) = self.images.get(n).cloned() {
                self.push(Content::new(ContentKind::Image, text));
            }
        }
    }

    fn push_text(&mut self, text: &str) {
        let text = strip_bold(text);
        if text.is_empty() {
            return;
        }
        if let Some(c) = link_line().captures(&text) {
            let mut content = Content::new(ContentKind::Link, &c[1]);
            content.link = Some(Link {
                link_text: c[1].to_string(),
                url: c[2].to_string(),
                extra: Map::new(),
            });
            self.push(content);
            return;
        }
        let kind = if is_conditional(&text) {
            ContentKind::Instruction
        } else {
            ContentKind::Paragraph
        };
        self.push(Content::new(kind, text));
    }

    fn set_header(&mut self, label: &str, value: &str) -> bool {
        let label = label.to_ascii_lowercase();
        let slot = match label.as_str() {
            "product" | "product name" => &mut self.record.header.name,
            "batch number" | "batch no" | "batch no." | "lot number" | "sku" => &mut self.record.header.sku,
            "manufacturing date" | "start date" => &mut self.record.header.start_date,
            "expiry date" | "expiration date" => &mut self.record.header.expiry_date,
            "completion date" => &mut self.record.header.completion_date,
            "batch size" | "batch quantity" | "quantity" => &mut self.record.header.quantity,
            _ => return false,
        };
        if slot.is_null() && !value.is_empty() {
            slot.value = Value::String(value.to_string());
        }
        true
    }

    fn finish(mut self) -> BmrRecord {
        if !self.orphans.is_empty() {
            let name = self.heading.clone().unwrap_or_else(|| "General".into());
            let orphans = std::mem::take(&mut self.orphans);
            self.add_step(name);
            let step = self.step.expect("step just added");
            self.record.steps[step].content.extend(orphans);
        }
        if self.record.header.name.is_null() {
            if let Some(h1) = self.h1.take() {
                self.record.header.name.value = Value::String(h1);
            }
        }
        self.record
    }
}

fn is_table_line(line: &str) -> bool {
    line.trim_start().starts_with('|')
}

fn table_cells(line: &str) -> Vec<String> {
    let t = line.trim();
    let t = t.strip_prefix('|').unwrap_or(t);
    let t = t.strip_suffix('|').unwrap_or(t);
    t.split('|').map(|c| c.trim().to_string()).collect()
}

fn is_separator_row(cells: &[String]) -> bool {
    cells
        .iter()
        .all(|c| !c.is_empty() && c.trim_matches(':').chars().all(|ch| ch == '-'))
}

fn table_content(lines: &[&str], caption: Option<&str>) -> Option<Content> {
    let mut rows: Vec<Vec<String>> = lines.iter().map(|l| table_cells(l)).collect();
    rows.retain(|r| !is_separator_row(r));
    if rows.is_empty() {
        return None;
    }
    let headers = rows.remove(0);
    let width = headers.len();
    let rows = rows
        .into_iter()
        .map(|mut r| {
            r.resize(width, String::new());
            r.into_iter().map(Value::String).collect()
        })
        .collect();
    let mut c = Content::new(ContentKind::Table, caption.unwrap_or("Table"));
    c.headers = Some(headers);
    c.rows = Some(rows);
    Some(c)
}

fn is_result_label(label: &str) -> bool {
    let l = label.to_ascii_lowercase();
    ["yield", "result", "expected", "total"]
        .iter()
        .any(|k| l.split_whitespace().any(|w| w == *k))
        && !l.contains("range")
}

fn calculation_content(title: &str, lines: &[&str]) -> Content {
    let mut formula = String::new();
    let mut labels: Vec<(String, ValueParts)> = Vec::new();
    let mut result = None;
    let mut notes = Vec::new();

    for raw in lines {
        let line = strip_bold(raw);
        if let Some(body) = bullet_body(raw) {
            if let Some((label, rest)) = split_label(body) {
                labels.push((label.to_string(), parse_value(rest)));
                continue;
            }
        }
        match line.split_once(':') {
            Some((k, v)) if k.trim().eq_ignore_ascii_case("formula") => formula = v.trim().to_string(),
            Some((k, v)) if k.trim().eq_ignore_ascii_case("variables") && v.trim().is_empty() => {}
            Some((k, v)) if result.is_none() && is_result_label(k) => {
                let parts = parse_value(v);
                let value = parts
                    .value
                    .as_deref()
                    .and_then(json_number)
                    .or_else(|| parts.value.clone().map(Value::String))
                    .unwrap_or(Value::Null);
                result = Some(CalcResult {
                    value,
                    unit: parts.unit,
                    extra: Map::new(),
                });
            }
            _ if !line.is_empty() => notes.push(line),
            _ => {}
        }
    }

    let operands: Vec<&str> = operand()
        .find_iter(&formula)
        .map(|m| m.as_str())
        .filter(|o| !o.eq_ignore_ascii_case("x"))
        .collect();
    let mut used = vec![false; operands.len()];
    let variables = labels
        .into_iter()
        .map(|(label, parts)| {
            let lower = label.to_lowercase();
            let hit = operands.iter().enumerate().position(|(i, o)| {
                !used[i] && lower.split_whitespace().any(|w| w == o.to_lowercase())
            });
            let name = match hit {
                Some(i) => {
                    used[i] = true;
                    operands[i].to_string()
                }
                None => label.clone(),
            };
            let value = parts
                .value
                .as_deref()
                .map(|v| json_number(v).unwrap_or_else(|| Value::String(v.to_string())));
            Variable {
                name,
                description: label,
                value,
                unit: parts.unit,
                extra: Map::new(),
            }
        })
        .collect();

    let mut c = Content::new(ContentKind::Calculation, format!("{title} Calculation"));
    c.calculation = Some(Calculation {
        formula,
        variables,
        result,
        notes: (!notes.is_empty()).then(|| notes.join("; ")),
        extra: Map::new(),
    });
    c
}

fn is_structural(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with('#')
        || bold_label()
            .captures(t)
            .is_some_and(|c| step_label().is_match(c[1].trim()) || c[1].trim().eq_ignore_ascii_case("calculation"))
}

enum Pending {
    None,
    Form(Vec<FormField>),
    List(Vec<String>),
}

impl Builder {
    fn flush(&mut self, pending: &mut Pending) {
        match std::mem::replace(pending, Pending::None) {
            Pending::None => {}
            Pending::Form(fields) => {
                let mut c = Content::new(ContentKind::DataForm, "Recorded values");
                c.fields = Some(fields);
                self.push(c);
            }
            Pending::List(items) => {
                let mut c = Content::new(ContentKind::BulletList, "");
                c.items = Some(items);
                self.push(c);
            }
        }
    }

    fn bullet_run(&mut self, items: &[String]) {
        let is_form = items.iter().any(|i| blank_run().is_match(i));
        let mut pending = Pending::None;
        for item in items {
            let (images, text) = split_images(item);
            if !images.is_empty() {
                self.flush(&mut pending);
                self.push_text(&text);
                self.push_images(&images);
                continue;
            }
            if is_form {
                if let Some(fields) = form_fields(&text) {
                    if !matches!(pending, Pending::Form(_)) {
                        self.flush(&mut pending);
                        pending = Pending::Form(Vec::new());
                    }
                    if let Pending::Form(all) = &mut pending {
                        all.extend(fields);
                    }
                    continue;
                }
            }
            if is_form || is_conditional(&text) || link_line().is_match(&text) {
                self.flush(&mut pending);
                if is_conditional(&text) || link_line().is_match(&text) {
                    self.push_text(&text);
                } else {
                    self.push(Content::new(ContentKind::Instruction, strip_bold(&text)));
                }
                continue;
            }
            if !matches!(pending, Pending::List(_)) {
                self.flush(&mut pending);
                pending = Pending::List(Vec::new());
            }
            if let Pending::List(all) = &mut pending {
                all.push(strip_bold(&text));
            }
        }
        self.flush(&mut pending);
    }
}

/// Rule-based extraction of one chunk into a locally numbered record.
pub fn mock_extract(chunk: &Chunk) -> BmrRecord {
    let (text, images) = mask_images(&chunk.text);
    let lines: Vec<&str> = text.lines().collect();
    let mut b = Builder::new(images);
    let mut i = 0;

    while i < lines.len() {
        let raw = lines[i];
        let line = raw.trim();
        i += 1;
        if line.is_empty() {
            continue;
        }

        if let Some(h) = line.strip_prefix("# ") {
            let h = h.trim().to_string();
            b.heading = Some(h.clone());
            b.h1.get_or_insert(h);
            continue;
        }
        if let Some(h) = line.strip_prefix("## ") {
            let h = h.trim();
            b.pending_group = Some(title_first_word(h));
            b.group = None;
            b.phase = None;
            b.heading = Some(h.to_string());
            continue;
        }
        if let Some(h) = line.strip_prefix("### ") {
            let h = h.trim();
            let name = phase_heading()
                .captures(h)
                .map_or_else(|| h.to_string(), |c| c[1].trim().to_string());
            b.add_phase(name);
            b.heading = Some(h.to_string());
            continue;
        }
        if line.starts_with('#') {
            let h = line.trim_start_matches('#').trim();
            b.heading = Some(h.to_string());
            b.push_text(h);
            continue;
        }

        if let Some(c) = bold_label().captures(line) {
            let label = c[1].trim().to_string();
            let value = c[2].trim().to_string();
            if step_label().is_match(&label) {
                let name = if value.is_empty() { label.clone() } else { strip_bold(&value) };
                b.add_step(name);
                continue;
            }
            if label.eq_ignore_ascii_case("calculation") {
                let start = i;
                while i < lines.len() && !lines[i].trim().is_empty() && !is_structural(lines[i]) {
                    i += 1;
                }
                let title = if value.is_empty() { "Calculation".to_string() } else { value };
                let content = calculation_content(title.trim_end_matches(" Calculation"), &lines[start..i]);
                b.push(content);
                continue;
            }
            match label.to_ascii_lowercase().as_str() {
                "note" => {
                    b.push(Content::new(ContentKind::Note, strip_bold(&value)));
                    continue;
                }
                "warning" | "caution" => {
                    b.push(Content::new(ContentKind::Warning, strip_bold(&value)));
                    continue;
                }
                _ => {}
            }
            if b.set_header(&label, &value) {
                continue;
            }
        }

        if is_table_line(line) {
            let start = i - 1;
            while i < lines.len() && is_table_line(lines[i]) {
                i += 1;
            }
            if let Some(c) = table_content(&lines[start..i], b.heading.as_deref()) {
                b.push(c);
            }
            continue;
        }

        if let Some(body) = bullet_body(raw) {
            let mut items = vec![body.trim().to_string()];
            while i < lines.len() {
                let next = lines[i];
                if let Some(body) = bullet_body(next) {
                    items.push(body.trim().to_string());
                } else if next.starts_with(char::is_whitespace) && !next.trim().is_empty() {
                    let last = items.last_mut().expect("run is non-empty");
                    last.push(' ');
                    last.push_str(next.trim());
                } else {
                    break;
                }
                i += 1;
            }
            b.bullet_run(&items);
            continue;
        }

        if let Some(c) = numbered_item().captures(line) {
            let mut items = vec![strip_bold(&c[1])];
            while i < lines.len() {
                match numbered_item().captures(lines[i].trim()) {
                    Some(c) => items.push(strip_bold(&c[1])),
                    None => break,
                }
                i += 1;
            }
            let mut content = Content::new(ContentKind::NumberedList, "");
            content.items = Some(items);
            b.push(content);
            continue;
        }

        let (ids, rest) = split_images(line);
        b.push_text(&rest);
        b.push_images(&ids);
    }
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn extract(text: &str) -> BmrRecord {
        mock_extract(&Chunk {
            index: 0,
            token_count: 0,
            text: text.into(),
        })
    }

    #[test]
    fn value_parts() {
        assert_eq!(
            parse_value(" 50.0 kg +/- 0.5 kg"),
            ValueParts {
                value: Some("50.0".into()),
                unit: Some("kg".into()),
                rest: Some("+/- 0.5 kg".into())
            }
        );
        assert_eq!(
            parse_value(" ________ kg"),
            ValueParts {
                value: None,
                unit: Some("kg".into()),
                rest: None
            }
        );
        assert_eq!(parse_value("2024-03-15").value.as_deref(), Some("2024-03-15"));
        assert_eq!(parse_value("500mg").unit.as_deref(), Some("mg"));
        assert_eq!(parse_value("John Smith").value.as_deref(), Some("John Smith"));
    }

    #[test]
    fn multi_blank_line_splits() {
        let f = form_fields("Performed by: ________ Date: ________").unwrap();
        let labels: Vec<_> = f.iter().map(|f| f.label.as_str()).collect();
        assert_eq!(labels, ["Performed by", "Date"]);
        assert!(f.iter().all(|f| f.value.is_none()));

        let f = form_fields("Weight: ____ kg Time: ____ min").unwrap();
        assert_eq!(f[0].unit.as_deref(), Some("kg"));
        assert_eq!(f[1].label, "Time");
        assert_eq!(f[1].unit.as_deref(), Some("min"));
    }

    #[test]
    fn group_named_from_first_word() {
        assert_eq!(title_first_word("PROCESSING INSTRUCTIONS"), "Processing");
        assert_eq!(title_first_word("  "), "General");
    }

    #[test]
    fn orphan_content_gets_implicit_step() {
        let r = extract("Mix gently until uniform.");
        assert_eq!(r.steps.len(), 1);
        assert_eq!(r.groups.len(), 1);
        assert_eq!(r.steps[0].content[0].text, "Mix gently until uniform.");
    }

    #[test]
    fn empty_chunk_gives_empty_record() {
        assert_eq!(extract(""), BmrRecord::empty());
    }

    #[test]
    fn conditional_bullets_become_instructions() {
        let r = extract("**Step 1:** Check\n- Reject batch if yield < 95%\n- Wipe surface\n");
        let kinds: Vec<_> = r.steps[0].content.iter().map(|c| c.kind).collect();
        assert_eq!(kinds, [ContentKind::Instruction, ContentKind::BulletList]);
    }

    #[test]
    fn image_inside_paragraph() {
        let r = extract("**Step 1:** Look\nSee this [Image Text: a\n b] now");
        let c = &r.steps[0].content;
        assert_eq!(c[0].text, "See this now");
        assert_eq!(c[1].kind, ContentKind::Image);
        assert_eq!(c[1].text, "a b");
    }

    #[test]
    fn numbered_list_and_note() {
        let r = extract("**Step 1:** Do\n1. First\n2. Second\n**Note:** Careful\n**Warning:** Hot");
        let c = &r.steps[0].content;
        assert_eq!(c[0].kind, ContentKind::NumberedList);
        assert_eq!(c[0].items.as_ref().unwrap(), &["First", "Second"]);
        assert_eq!(c[1].kind, ContentKind::Note);
        assert_eq!(c[2].kind, ContentKind::Warning);
    }

    #[test]
    fn link_line_becomes_link() {
        let r = extract("**Step 1:** Read\n[SOP-1234 Cleaning](https://example.org/sop)");
        let c = &r.steps[0].content[0];
        assert_eq!(c.kind, ContentKind::Link);
        assert_eq!(c.link.as_ref().unwrap().url, "https://example.org/sop");
    }

    #[test]
    fn ragged_table_is_padded() {
        let r = extract("**Step 1:** T\n| a | b |\n|---|---|\n| 1 |\n");
        let c = &r.steps[0].content[0];
        assert_eq!(c.rows.as_ref().unwrap()[0].len(), 2);
    }
}
