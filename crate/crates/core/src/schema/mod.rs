//! Canonical record model: a header plus flat group/phase/step arrays linked
//! by string ids.
//!
//! Objects keep any keys the model does not know about in an `extra` map and
//! write them back unchanged on serialization.

mod parse;

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use serde_json::{Map, Value};

pub use parse::{parse_record, parse_record_str};

const SCHEMA_TEMPLATE: &str = include_str!("../../assets/schema_template.ts");

/// The fixed schema text substituted into extraction prompts.
pub fn schema_prompt_text() -> &'static str {
    SCHEMA_TEMPLATE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldType {
    Text,
    Numeric,
    Date,
    Choice,
    PassFail,
    Timestamp,
    Boolean,
}

impl FieldType {
    pub const ALL: [FieldType; 7] = [
        Self::Text,
        Self::Numeric,
        Self::Date,
        Self::Choice,
        Self::PassFail,
        Self::Timestamp,
        Self::Boolean,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Text => "text",
            Self::Numeric => "numeric",
            Self::Date => "date",
            Self::Choice => "choice",
            Self::PassFail => "pass_fail",
            Self::Timestamp => "timestamp",
            Self::Boolean => "boolean",
        }
    }
}

impl FromStr for FieldType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown field type {s:?}"))
    }
}

impl Serialize for FieldType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// A typed value slot: `{"type": [...], "value": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Field {
    #[serde(rename = "type")]
    pub types: Vec<FieldType>,
    pub value: Value,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Field {
    pub fn new(types: Vec<FieldType>, value: Value) -> Self {
        Self {
            types,
            value,
            extra: Map::new(),
        }
    }

    pub fn text(value: impl Into<String>) -> Self {
        Self::new(vec![FieldType::Text], Value::String(value.into()))
    }

    pub fn null(kind: FieldType) -> Self {
        Self::new(vec![kind], Value::Null)
    }

    pub fn is_null(&self) -> bool {
        self.value.is_null()
    }

    pub fn as_str(&self) -> Option<&str> {
        self.value.as_str()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub completion_date: Field,
    pub expiry_date: Field,
    pub name: Field,
    pub quantity: Field,
    pub sku: Field,
    pub start_date: Field,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Header {
    pub const KEYS: [&'static str; 6] = [
        "completion_date",
        "expiry_date",
        "name",
        "quantity",
        "sku",
        "start_date",
    ];

    /// All six slots null, with the types the schema template assigns.
    pub fn empty() -> Self {
        Self {
            completion_date: Field::null(FieldType::Date),
            expiry_date: Field::null(FieldType::Date),
            name: Field::null(FieldType::Text),
            quantity: Field::null(FieldType::Numeric),
            sku: Field::null(FieldType::Text),
            start_date: Field::null(FieldType::Date),
            extra: Map::new(),
        }
    }

    pub fn fields(&self) -> [(&'static str, &Field); 6] {
        [
            ("completion_date", &self.completion_date),
            ("expiry_date", &self.expiry_date),
            ("name", &self.name),
            ("quantity", &self.quantity),
            ("sku", &self.sku),
            ("start_date", &self.start_date),
        ]
    }

    pub fn fields_mut(&mut self) -> [(&'static str, &mut Field); 6] {
        [
            ("completion_date", &mut self.completion_date),
            ("expiry_date", &mut self.expiry_date),
            ("name", &mut self.name),
            ("quantity", &mut self.quantity),
            ("sku", &mut self.sku),
            ("start_date", &mut self.start_date),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContentKind {
    Paragraph,
    BulletList,
    NumberedList,
    Note,
    Warning,
    Instruction,
    DataForm,
    Calculation,
    Table,
    Image,
    Link,
    Attachments,
}

impl ContentKind {
    pub const ALL: [ContentKind; 12] = [
        Self::Paragraph,
        Self::BulletList,
        Self::NumberedList,
        Self::Note,
        Self::Warning,
        Self::Instruction,
        Self::DataForm,
        Self::Calculation,
        Self::Table,
        Self::Image,
        Self::Link,
        Self::Attachments,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Paragraph => "paragraph",
            Self::BulletList => "bullet_list",
            Self::NumberedList => "numbered_list",
            Self::Note => "note",
            Self::Warning => "warning",
            Self::Instruction => "instruction",
            Self::DataForm => "data_form",
            Self::Calculation => "calculation",
            Self::Table => "table",
            Self::Image => "image",
            Self::Link => "link",
            Self::Attachments => "attachments",
        }
    }
}

impl FromStr for ContentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown content type {s:?}"))
    }
}

impl fmt::Display for ContentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ContentKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormField {
    pub label: String,
    pub value: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limits: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl FormField {
    pub fn new(label: impl Into<String>, value: Option<String>) -> Self {
        Self {
            label: label.into(),
            value,
            unit: None,
            limits: None,
            notes: None,
            extra: Map::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub description: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalcResult {
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calculation {
    pub formula: String,
    pub variables: Vec<Variable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<CalcResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Link {
    pub link_text: String,
    pub url: String,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttachmentKind {
    Bom,
    Boe,
    Other,
}

impl AttachmentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bom => "BOM",
            Self::Boe => "BOE",
            Self::Other => "other",
        }
    }
}

impl FromStr for AttachmentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "BOM" => Ok(Self::Bom),
            "BOE" => Ok(Self::Boe),
            "other" => Ok(Self::Other),
            _ => Err(format!("unknown attachment kind {s:?}")),
        }
    }
}

impl Serialize for AttachmentKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attachment {
    pub name: String,
    pub kind: AttachmentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// A textual cross-reference recorded on the content that mentions it.
/// `target` is a record path when the reference resolved inside the record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReferenceNote {
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Content {
    #[serde(rename = "type")]
    pub kind: ContentKind,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub items: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fields: Option<Vec<FormField>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calculation: Option<Calculation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub headers: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<Value>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link: Option<Link>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attachment: Option<Attachment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub references: Option<Vec<ReferenceNote>>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Content {
    pub fn new(kind: ContentKind, text: impl Into<String>) -> Self {
        Self {
            kind,
            text: text.into(),
            items: None,
            fields: None,
            calculation: None,
            headers: None,
            rows: None,
            link: None,
            attachment: None,
            references: None,
            extra: Map::new(),
        }
    }

    /// Every human-readable string carried by this content, in field order.
    pub fn strings(&self) -> Vec<&str> {
        let mut out = vec![self.text.as_str()];
        if let Some(items) = &self.items {
            out.extend(items.iter().map(String::as_str));
        }
        for f in self.fields.iter().flatten() {
            out.push(&f.label);
            out.extend(f.value.as_deref());
            out.extend(f.unit.as_deref());
            out.extend(f.limits.as_deref());
            out.extend(f.notes.as_deref());
        }
        if let Some(calc) = &self.calculation {
            out.push(&calc.formula);
            for v in &calc.variables {
                out.push(&v.name);
                out.push(&v.description);
                if let Some(Value::String(s)) = &v.value {
                    out.push(s);
                }
                out.extend(v.unit.as_deref());
            }
            if let Some(r) = &calc.result {
                if let Value::String(s) = &r.value {
                    out.push(s);
                }
                out.extend(r.unit.as_deref());
            }
            out.extend(calc.notes.as_deref());
        }
        if let Some(h) = &self.headers {
            out.extend(h.iter().map(String::as_str));
        }
        for row in self.rows.iter().flatten() {
            out.extend(row.iter().filter_map(Value::as_str));
        }
        if let Some(l) = &self.link {
            out.push(&l.link_text);
            out.push(&l.url);
        }
        if let Some(a) = &self.attachment {
            out.push(&a.name);
            out.extend(a.reference.as_deref());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step {
    pub id: String,
    pub phase_id: String,
    pub group_id: String,
    pub step_name: Field,
    pub step_type: Field,
    pub content: Vec<Content>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phase {
    pub id: String,
    pub group_id: String,
    pub phase_name: Field,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Group {
    pub id: String,
    pub group_name: Field,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BmrRecord {
    pub header: Header,
    pub groups: Vec<Group>,
    pub phases: Vec<Phase>,
    pub steps: Vec<Step>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl BmrRecord {
    pub fn empty() -> Self {
        Self {
            header: Header::empty(),
            groups: Vec::new(),
            phases: Vec::new(),
            steps: Vec::new(),
            extra: Map::new(),
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("record serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    /// Contents in document order with their record paths.
    pub fn contents(&self) -> impl Iterator<Item = (String, &Content)> {
        self.steps.iter().enumerate().flat_map(|(si, step)| {
            step.content
                .iter()
                .enumerate()
                .map(move |(ci, c)| (format!("steps[{si}].content[{ci}]"), c))
        })
    }
}

/// Kinds of id the record uses; each is `<prefix>-<positive integer>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdKind {
    Group,
    Phase,
    Step,
}

impl IdKind {
    pub fn prefix(self) -> &'static str {
        match self {
            Self::Group => "group",
            Self::Phase => "phase",
            Self::Step => "step",
        }
    }

    pub fn format(self, n: u64) -> String {
        format!("{}-{n}", self.prefix())
    }
}

/// Numeric suffix of a well-formed id, e.g. `step-12` -> 12.
pub fn id_suffix(kind: IdKind, id: &str) -> Option<u64> {
    let digits = id.strip_prefix(kind.prefix())?.strip_prefix('-')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    digits.parse().ok().filter(|&n| n > 0)
}
