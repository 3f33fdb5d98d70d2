//! Loading of OCR-produced markdown exports.
//!
//! The upstream OCR stage emits markdown with embedded `[Image Text: ...]`
//! markers wherever it transcribed text out of a picture. This module reads
//! those exports, normalizes line endings and locates the markers so the
//! metrics stage can check that every image made it into the record.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

const BOM: char = '\u{feff}';
const MARKER_OPEN: &str = "[Image Text:";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path} is not valid UTF-8 (byte {valid_up_to}); expected a text export")]
    Encoding { path: PathBuf, valid_up_to: usize },
}

/// A markdown document with `\n` line endings and no byte-order mark.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDocument {
    pub path: PathBuf,
    pub text: String,
    pub byte_len: usize,
}

impl SourceDocument {
    /// Wraps in-memory text, applying the same normalization as [`load_markdown`].
    pub fn from_text(path: impl Into<PathBuf>, text: &str) -> Self {
        let text = normalize(text);
        let byte_len = text.len();
        Self {
            path: path.into(),
            text,
            byte_len,
        }
    }
}

pub fn load_markdown(path: impl AsRef<Path>) -> Result<SourceDocument, IngestError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|e| IngestError::Encoding {
        path: path.to_path_buf(),
        valid_up_to: e.utf8_error().valid_up_to(),
    })?;
    Ok(SourceDocument::from_text(path, &text))
}

fn normalize(text: &str) -> String {
    let text = text.strip_prefix(BOM).unwrap_or(text);
    if !text.contains('\r') {
        return text.to_string();
    }
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Span of one `[Image Text: ...]` marker, in character offsets.
///
/// `end` is exclusive and points just past the closing bracket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageMarker {
    pub start: usize,
    pub end: usize,
    /// Whitespace-collapsed text between the opener and the first `]`.
    pub inner_text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkerScan {
    pub markers: Vec<ImageMarker>,
    /// Openers with no closing bracket or with blank inner text.
    pub malformed: usize,
}

/// Scans left to right for image markers. Nesting is not supported: the first
/// `]` after an opener closes it. Markers may span lines.
pub fn find_image_markers(text: &str) -> MarkerScan {
    let mut scan = MarkerScan::default();
    let mut byte_pos = 0;
    let mut char_pos = 0;

    while let Some(rel) = text[byte_pos..].find(MARKER_OPEN) {
        let open_byte = byte_pos + rel;
        let open_char = char_pos + text[byte_pos..open_byte].chars().count();
        let inner_byte = open_byte + MARKER_OPEN.len();

        let Some(close_rel) = text[inner_byte..].find(']') else {
            // every remaining opener is unclosed
            scan.malformed += text[open_byte..].matches(MARKER_OPEN).count();
            break;
        };
        let close_byte = inner_byte + close_rel;
        let inner = collapse_whitespace(&text[inner_byte..close_byte]);
        let end_char = open_char + text[open_byte..=close_byte].chars().count();

        if inner.is_empty() {
            scan.malformed += 1;
        } else {
            scan.markers.push(ImageMarker {
                start: open_char,
                end: end_char,
                inner_text: inner,
            });
        }
        byte_pos = close_byte + 1;
        char_pos = end_char;
    }
    scan
}

pub(crate) fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
