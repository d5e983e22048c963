//! Tokenizers used for token statistics and chunking.
//!
//! `default` is a reproducible stand-in: whitespace-separated words, except
//! that every CJK character becomes its own token. A WordPiece tokenizer
//! driven by a vocabulary file (one piece per line, `##` marking
//! continuation pieces) can be selected with `vocab:<path>`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::text::is_punctuation;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("unknown tokenizer '{0}' (expected 'default' or 'vocab:<path>')")]
    Unknown(String),
    #[error("cannot read vocabulary {path}: {source}")]
    Vocab {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("vocabulary {0} is empty")]
    EmptyVocab(String),
}

pub trait Tokenizer: Send + Sync {
    fn name(&self) -> &str;
    fn tokenize(&self, text: &str) -> Vec<String>;

    fn count(&self, text: &str) -> usize {
        self.tokenize(text).len()
    }
}

/// Han ideographs, kana, CJK symbols and punctuation, fullwidth forms.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3000..=0x303F     // CJK symbols and punctuation
        | 0x3040..=0x309F   // Hiragana
        | 0x30A0..=0x30FF   // Katakana
        | 0x31F0..=0x31FF   // Katakana phonetic extensions
        | 0x3400..=0x4DBF   // CJK extension A
        | 0x4E00..=0x9FFF   // CJK unified ideographs
        | 0xF900..=0xFAFF   // CJK compatibility ideographs
        | 0xFF00..=0xFFEF   // Halfwidth and fullwidth forms
        | 0x20000..=0x2FA1F // CJK extensions B..F, compatibility supplement
    )
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultTokenizer;

impl Tokenizer for DefaultTokenizer {
    fn name(&self) -> &str {
        "default"
    }

    fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for word in text.split_whitespace() {
            split_cjk(word, &mut out);
        }
        out
    }

    fn count(&self, text: &str) -> usize {
        let mut n = 0;
        for word in text.split_whitespace() {
            let mut in_run = false;
            for c in word.chars() {
                if is_cjk(c) {
                    n += 1;
                    in_run = false;
                } else if !in_run {
                    n += 1;
                    in_run = true;
                }
            }
        }
        n
    }
}

fn split_cjk(word: &str, out: &mut Vec<String>) {
    let mut start = None;
    for (i, c) in word.char_indices() {
        if is_cjk(c) {
            if let Some(s) = start.take() {
                out.push(word[s..i].to_string());
            }
            out.push(c.to_string());
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(word[s..].to_string());
    }
}

/// Greedy longest-match-first WordPiece over a fixed vocabulary.
///
/// Pre-tokenization splits on whitespace, isolates punctuation and CJK
/// characters; each resulting word is then split into vocabulary pieces.
/// Words that cannot be covered become the unknown token.
#[derive(Debug, Clone)]
pub struct VocabTokenizer {
    name: String,
    vocab: HashSet<String>,
    unk: String,
    max_word_chars: usize,
}

impl VocabTokenizer {
    pub fn new(name: impl Into<String>, pieces: impl IntoIterator<Item = String>) -> Self {
        Self {
            name: name.into(),
            vocab: pieces.into_iter().collect(),
            unk: "[UNK]".to_string(),
            max_word_chars: 100,
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, TokenizerError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let body = fs::read_to_string(path).map_err(|source| TokenizerError::Vocab {
            path: shown.clone(),
            source,
        })?;
        let pieces: Vec<String> = body
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        if pieces.is_empty() {
            return Err(TokenizerError::EmptyVocab(shown));
        }
        Ok(Self::new(format!("vocab:{shown}"), pieces))
    }

    fn pre_tokenize(text: &str) -> Vec<&str> {
        let mut words = Vec::new();
        for chunk in text.split_whitespace() {
            let mut start = None;
            for (i, c) in chunk.char_indices() {
                if is_cjk(c) || is_punctuation(c) {
                    if let Some(s) = start.take() {
                        words.push(&chunk[s..i]);
                    }
                    words.push(&chunk[i..i + c.len_utf8()]);
                } else if start.is_none() {
                    start = Some(i);
                }
            }
            if let Some(s) = start {
                words.push(&chunk[s..]);
            }
        }
        words
    }

    fn word_pieces(&self, word: &str, out: &mut Vec<String>) {
        let bounds: Vec<usize> = word
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(word.len()))
            .collect();
        if bounds.len() - 1 > self.max_word_chars {
            out.push(self.unk.clone());
            return;
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        while start < bounds.len() - 1 {
            let mut end = bounds.len() - 1;
            let mut found = None;
            while end > start {
                let sub = &word[bounds[start]..bounds[end]];
                let candidate = if start == 0 {
                    sub.to_string()
                } else {
                    format!("##{sub}")
                };
                if self.vocab.contains(&candidate) {
                    found = Some(candidate);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(p) => {
                    pieces.push(p);
                    start = end;
                }
                None => {
                    out.push(self.unk.clone());
                    return;
                }
            }
        }
        out.extend(pieces);
    }
}

impl Tokenizer for VocabTokenizer {
    fn name(&self) -> &str {
        &self.name
    }

    fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for word in Self::pre_tokenize(text) {
            self.word_pieces(word, &mut out);
        }
        out
    }
}

/// Resolve a tokenizer by CLI name.
pub fn tokenizer_by_name(name: &str) -> Result<Box<dyn Tokenizer>, TokenizerError> {
    if name == "default" {
        return Ok(Box::new(DefaultTokenizer));
    }
    if let Some(path) = name.strip_prefix("vocab:") {
        return Ok(Box::new(VocabTokenizer::from_file(path)?));
    }
    Err(TokenizerError::Unknown(name.to_string()))
}
