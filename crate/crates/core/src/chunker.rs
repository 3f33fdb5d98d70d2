//! Token-bounded chunking with greedy sentence packing.
//!
//! Sentences are packed in order until the next one would overflow the
//! budget. A sentence above the hard-split threshold is cut into windows of
//! at most `max_tokens` tokens. Packed chunks are contiguous slices of the
//! source, so markdown line structure survives inside a chunk.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MAX_TOKENS: usize = 3000;
pub const DEFAULT_HARD_SPLIT_THRESHOLD: usize = 2000;

pub type TokenId = u32;

/// Encoder/decoder pair used to measure and hard-split text.
///
/// `decode(encode(t))` must equal `t` up to whitespace collapsing.
pub trait Tokenizer: Send + Sync {
    fn encode(&self, text: &str) -> Vec<TokenId>;
    fn decode(&self, ids: &[TokenId]) -> String;

    fn count(&self, text: &str) -> usize {
        self.encode(text).len()
    }
}

/// One token per whitespace-delimited word; decode joins with single spaces.
#[derive(Debug, Default)]
pub struct WordTokenizer {
    vocab: RwLock<Vocab>,
}

#[derive(Debug, Default)]
struct Vocab {
    ids: HashMap<String, TokenId>,
    words: Vec<String>,
}

impl WordTokenizer {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&self, word: &str) -> TokenId {
        if let Some(&id) = self.vocab.read().expect("vocab lock").ids.get(word) {
            return id;
        }
        let mut vocab = self.vocab.write().expect("vocab lock");
        if let Some(&id) = vocab.ids.get(word) {
            return id;
        }
        let id = TokenId::try_from(vocab.words.len()).expect("vocabulary exceeds u32");
        vocab.words.push(word.to_string());
        vocab.ids.insert(word.to_string(), id);
        id
    }
}

impl Tokenizer for WordTokenizer {
    fn encode(&self, text: &str) -> Vec<TokenId> {
        text.split_whitespace().map(|w| self.intern(w)).collect()
    }

    fn decode(&self, ids: &[TokenId]) -> String {
        let vocab = self.vocab.read().expect("vocab lock");
        ids.iter()
            .map(|&id| vocab.words[id as usize].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChunkConfigError {
    #[error("max_tokens must be positive")]
    ZeroMaxTokens,
    #[error("hard_split_threshold must be positive")]
    ZeroThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkingConfig {
    pub max_tokens: usize,
    pub hard_split_threshold: usize,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        Self {
            max_tokens: DEFAULT_MAX_TOKENS,
            hard_split_threshold: DEFAULT_HARD_SPLIT_THRESHOLD,
        }
    }
}

impl ChunkingConfig {
    pub fn new(max_tokens: usize, hard_split_threshold: usize) -> Result<Self, ChunkConfigError> {
        let cfg = Self {
            max_tokens,
            hard_split_threshold,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ChunkConfigError> {
        if self.max_tokens == 0 {
            return Err(ChunkConfigError::ZeroMaxTokens);
        }
        if self.hard_split_threshold == 0 {
            return Err(ChunkConfigError::ZeroThreshold);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub index: usize,
    pub token_count: usize,
    pub text: String,
}

/// Byte ranges of sentences. A boundary is a whitespace run directly after
/// `.`, `!` or `?`; the run is consumed and surrounding whitespace trimmed.
fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    let mut prev: Option<char> = None;
    let mut iter = text.char_indices().peekable();

    while let Some((i, c)) = iter.next() {
        if c.is_whitespace() && matches!(prev, Some('.' | '!' | '?')) {
            let mut end_ws = i + c.len_utf8();
            while let Some(&(j, d)) = iter.peek() {
                if !d.is_whitespace() {
                    break;
                }
                end_ws = j + d.len_utf8();
                iter.next();
            }
            push_trimmed(text, start, i, &mut spans);
            start = end_ws;
            prev = None;
            continue;
        }
        prev = Some(c);
    }
    push_trimmed(text, start, text.len(), &mut spans);
    spans
}

fn push_trimmed(text: &str, start: usize, end: usize, spans: &mut Vec<(usize, usize)>) {
    let seg = &text[start..end];
    let lead = seg.len() - seg.trim_start().len();
    let trimmed = seg.trim();
    if !trimmed.is_empty() {
        spans.push((start + lead, start + lead + trimmed.len()));
    }
}

pub fn split_sentences(text: &str) -> Vec<&str> {
    sentence_spans(text).into_iter().map(|(s, e)| &text[s..e]).collect()
}

pub fn count_tokens(text: &str, tok: &dyn Tokenizer) -> usize {
    tok.count(text)
}

struct Pending {
    start: usize,
    end: usize,
    tokens: usize,
}

pub fn chunk_text_by_tokens(text: &str, cfg: &ChunkingConfig, tok: &dyn Tokenizer) -> Vec<Chunk> {
    let mut chunks: Vec<Chunk> = Vec::new();
    let mut pending: Option<Pending> = None;

    let emit = |chunks: &mut Vec<Chunk>, body: String| {
        let token_count = tok.count(&body);
        chunks.push(Chunk {
            index: chunks.len(),
            token_count,
            text: body,
        });
    };

    for (start, end) in sentence_spans(text) {
        let sentence = &text[start..end];
        let sent_tokens = tok.count(sentence);

        // Oversized sentences are windowed. A sentence that fits no window
        // is windowed too, whatever the threshold says.
        if sent_tokens > cfg.hard_split_threshold || sent_tokens > cfg.max_tokens {
            if let Some(p) = pending.take() {
                emit(&mut chunks, text[p.start..p.end].to_string());
            }
            let ids = tok.encode(sentence);
            for window in ids.chunks(cfg.max_tokens) {
                emit(&mut chunks, tok.decode(window));
            }
            continue;
        }

        match pending.as_mut() {
            Some(p) if p.tokens + sent_tokens > cfg.max_tokens => {
                let body = text[p.start..p.end].to_string();
                emit(&mut chunks, body);
                pending = Some(Pending {
                    start,
                    end,
                    tokens: sent_tokens,
                });
            }
            Some(p) => {
                p.end = end;
                p.tokens += sent_tokens;
            }
            None => {
                pending = Some(Pending {
                    start,
                    end,
                    tokens: sent_tokens,
                });
            }
        }
    }
    if let Some(p) = pending {
        emit(&mut chunks, text[p.start..p.end].to_string());
    }
    chunks
}
