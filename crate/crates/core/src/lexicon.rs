//! Per-language medical keyword lists.
//!
//! File format: UTF-8, one term per line. Lines whose first non-blank
//! character is `#` are comments; blank lines are ignored. Terms are stored
//! in their [`normalize_term`] form and deduplicated after normalization.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::text::{char_len, normalize_term};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon {path} is not valid UTF-8 (first bad byte at offset {offset})")]
    InvalidUtf8 { path: PathBuf, offset: usize },
    #[error("lexicon for '{lang}' has no usable terms")]
    Empty { lang: String },
}

/// An immutable, normalized keyword set for one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    lang: String,
    terms: BTreeSet<String>,
    raw_count: usize,
    duplicates_removed: usize,
}

impl Lexicon {
    /// Build a lexicon from raw entries (comments and blanks already
    /// excluded by the caller or not; they are handled here either way).
    pub fn from_lines<'a, I>(lang: &str, lines: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut terms = BTreeSet::new();
        let mut raw_count = 0;
        let mut usable = 0;
        for line in lines {
            raw_count += 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let term = normalize_term(trimmed);
            if term.is_empty() {
                continue;
            }
            usable += 1;
            terms.insert(term);
        }
        if terms.is_empty() {
            return Err(LexiconError::Empty {
                lang: lang.to_string(),
            });
        }
        let duplicates_removed = usable - terms.len();
        if duplicates_removed > 0 {
            log::warn!("lexicon '{lang}': collapsed {duplicates_removed} duplicate term(s)");
        }
        Ok(Self {
            lang: lang.to_string(),
            terms,
            raw_count,
            duplicates_removed,
        })
    }

    pub fn lang(&self) -> &str {
        &self.lang
    }

    /// Normalized terms in lexicographic order.
    pub fn terms(&self) -> &BTreeSet<String> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of lines read, before comment removal and deduplication.
    pub fn raw_count(&self) -> usize {
        self.raw_count
    }

    pub fn duplicates_removed(&self) -> usize {
        self.duplicates_removed
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    /// A new lexicon with one more entry. Used by property tests and by
    /// callers that extend a shipped list at runtime.
    pub fn with_term(&self, term: &str) -> Self {
        let mut out = self.clone();
        let term = normalize_term(term);
        out.raw_count += 1;
        if !term.is_empty() && !out.terms.insert(term) {
            out.duplicates_removed += 1;
        }
        out
    }
}

/// Load `path` as the lexicon for `lang`.
pub fn load_lexicon(path: impl AsRef<Path>, lang: &str) -> Result<Lexicon, LexiconError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|e| LexiconError::InvalidUtf8 {
        path: path.to_path_buf(),
        offset: e.utf8_error().valid_up_to(),
    })?;
    Lexicon::from_lines(lang, text.lines())
}

/// Load every `<lang>.txt` in `dir` for the requested languages.
pub fn load_lexicon_dir<'a>(
    dir: impl AsRef<Path>,
    langs: impl IntoIterator<Item = &'a str>,
) -> Result<Vec<Lexicon>, LexiconError> {
    let dir = dir.as_ref();
    langs
        .into_iter()
        .map(|lang| load_lexicon(dir.join(format!("{lang}.txt")), lang))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub lang: String,
    pub count: usize,
    pub raw_count: usize,
    pub duplicates_removed: usize,
    /// Shortest term, in characters.
    pub min_len: usize,
    /// Longest term, in characters.
    pub max_len: usize,
}

pub fn validate_lexicon(lex: &Lexicon) -> ValidationReport {
    let lens = lex.terms.iter().map(|t| char_len(t));
    let min_len = lens.clone().min().unwrap_or(0);
    let max_len = lens.max().unwrap_or(0);
    ValidationReport {
        lang: lex.lang.clone(),
        count: lex.terms.len(),
        raw_count: lex.raw_count,
        duplicates_removed: lex.duplicates_removed,
        min_len,
        max_len,
    }
}
