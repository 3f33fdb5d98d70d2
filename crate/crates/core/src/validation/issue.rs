use std::fmt;

use serde::{Deserialize, Serialize};

/// Which validation layer raised an issue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Syntactic,
    Structural,
    Compliance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

/// Closed set of machine codes emitted anywhere in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    // syntactic
    JsonMalformed,
    BadFieldType,
    BadContentKind,
    RowWidthMismatch,
    CodeSyntaxResidue,
    TagFallback,
    NoJsonPayload,
    BackendError,
    // record shape
    MissingField,
    BadIdFormat,
    // structural
    ClassNesting,
    DupId,
    DanglingRef,
    GroupMismatch,
    SeqOrder,
    // merge
    DanglingLocalRef,
    ChunkMissing,
    HeaderConflict,
    // compliance
    CalcIncomplete,
    UnitlessLimit,
    UnnamedStep,
    HeaderGap,
    UnresolvedRef,
    BadPassfail,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::JsonMalformed => "JSON_MALFORMED",
            Self::BadFieldType => "BAD_FIELD_TYPE",
            Self::BadContentKind => "BAD_CONTENT_KIND",
            Self::RowWidthMismatch => "ROW_WIDTH_MISMATCH",
            Self::CodeSyntaxResidue => "CODE_SYNTAX_RESIDUE",
            Self::TagFallback => "TAG_FALLBACK",
            Self::NoJsonPayload => "NO_JSON_PAYLOAD",
            Self::BackendError => "BACKEND_ERROR",
            Self::MissingField => "MISSING_FIELD",
            Self::BadIdFormat => "BAD_ID_FORMAT",
            Self::ClassNesting => "CLASS_NESTING",
            Self::DupId => "DUP_ID",
            Self::DanglingRef => "DANGLING_REF",
            Self::GroupMismatch => "GROUP_MISMATCH",
            Self::SeqOrder => "SEQ_ORDER",
            Self::DanglingLocalRef => "DANGLING_LOCAL_REF",
            Self::ChunkMissing => "CHUNK_MISSING",
            Self::HeaderConflict => "HEADER_CONFLICT",
            Self::CalcIncomplete => "CALC_INCOMPLETE",
            Self::UnitlessLimit => "UNITLESS_LIMIT",
            Self::UnnamedStep => "UNNAMED_STEP",
            Self::HeaderGap => "HEADER_GAP",
            Self::UnresolvedRef => "UNRESOLVED_REF",
            Self::BadPassfail => "BAD_PASSFAIL",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single finding, addressed by a record path such as `steps[3].content[1].rows[2]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub layer: Layer,
    pub severity: Severity,
    pub path: String,
    pub code: IssueCode,
    pub message: String,
}

impl ValidationIssue {
    pub fn new(
        layer: Layer,
        severity: Severity,
        code: IssueCode,
        path: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Self {
            layer,
            severity,
            path: path.into(),
            code,
            message: message.into(),
        }
    }

    pub fn error(layer: Layer, code: IssueCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(layer, Severity::Error, code, path, message)
    }

    pub fn warning(layer: Layer, code: IssueCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(layer, Severity::Warning, code, path, message)
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev} {} at {}: {}", self.code, self.path, self.message)
    }
}

/// Aggregated outcome of the validation layers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn from_issues(issues: Vec<ValidationIssue>) -> Self {
        let passed = !issues.iter().any(ValidationIssue::is_error);
        Self { issues, passed }
    }

    pub fn extend(&mut self, more: impl IntoIterator<Item = ValidationIssue>) {
        self.issues.extend(more);
        self.passed = !self.issues.iter().any(ValidationIssue::is_error);
    }

    pub fn has_code(&self, code: IssueCode) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }
}

/// Builds JSON-ish record paths (`steps[2].content[0]`).
pub(crate) fn join(parent: &str, key: &str) -> String {
    if parent.is_empty() || parent == "$" {
        key.to_string()
    } else {
        format!("{parent}.{key}")
    }
}

pub(crate) fn index(parent: &str, i: usize) -> String {
    format!("{parent}[{i}]")
}
