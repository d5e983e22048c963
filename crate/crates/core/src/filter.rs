//! Keyword-count / keyword-density classification of text as medical.
//!
//! A text is kept when it contains more than `t_c` distinct lexicon terms
//! (MKC) *and* matched keywords cover more than `t_d` of its characters
//! (DENS). Both comparisons are strict.
//!
//! Occurrences are counted non-overlapping, leftmost-longest, so the covered
//! character total never exceeds the text length. In space-delimited mode a
//! term nested inside a longer matched term still counts toward MKC (each
//! term is matched independently), but its characters are attributed only
//! once for DENS.

use std::collections::HashMap;
use std::fmt;

use aho_corasick::{AhoCorasick, MatchKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Lexicon;
use crate::text::{char_len, normalize, strip_punctuation};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("config is for '{config}' but lexicon is for '{lexicon}'")]
    LangMismatch { config: String, lexicon: String },
    #[error("invalid config for '{lang}': {reason}")]
    InvalidConfig { lang: String, reason: String },
    #[error("cannot build keyword automaton: {0}")]
    Automaton(#[from] aho_corasick::BuildError),
}

/// How a language separates words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentationMode {
    /// Words separated by whitespace (en, es, fr, ru).
    SpaceDelimited,
    /// No word separators; terms are matched as substrings (zh, ja).
    Contiguous,
}

impl SegmentationMode {
    /// The mode a known language must use, if we know it.
    pub fn expected_for(lang: &str) -> Option<Self> {
        match lang {
            "en" | "es" | "fr" | "ru" => Some(Self::SpaceDelimited),
            "zh" | "ja" => Some(Self::Contiguous),
            _ => None,
        }
    }
}

impl fmt::Display for SegmentationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SpaceDelimited => "space_delimited",
            Self::Contiguous => "contiguous",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub lang: String,
    pub mode: SegmentationMode,
    /// MKC threshold; kept texts have strictly more distinct terms.
    pub t_c: u32,
    /// DENS threshold in [0, 1]; kept texts have strictly higher density.
    pub t_d: f64,
}

impl MatchConfig {
    pub fn new(
        lang: impl Into<String>,
        mode: SegmentationMode,
        t_c: u32,
        t_d: f64,
    ) -> Result<Self, FilterError> {
        let cfg = Self {
            lang: lang.into(),
            mode,
            t_c,
            t_d,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        let invalid = |reason: String| FilterError::InvalidConfig {
            lang: self.lang.clone(),
            reason,
        };
        if !(0.0..=1.0).contains(&self.t_d) {
            return Err(invalid(format!("t_d {} outside [0, 1]", self.t_d)));
        }
        if let Some(expected) = SegmentationMode::expected_for(&self.lang) {
            if expected != self.mode {
                return Err(invalid(format!("mode must be {expected}, got {}", self.mode)));
            }
        }
        Ok(())
    }
}

/// One term and how many times it occurs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KeywordMatch {
    pub term: String,
    pub count: usize,
}

impl KeywordMatch {
    pub fn new(term: impl Into<String>, count: usize) -> Self {
        Self {
            term: term.into(),
            count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    /// Distinct matched terms.
    pub mkc: usize,
    pub dens: f64,
    pub keep: bool,
    /// Every matched term with its occurrence count, sorted by term.
    pub matched: Vec<KeywordMatch>,
    /// Leftmost-longest attribution used for DENS. Equal to `matched` unless
    /// some matched term only occurs nested inside longer matches.
    pub coverage: Vec<KeywordMatch>,
    /// Characters in the normalized text.
    pub text_len: usize,
}

/// Split `text` into match units.
///
/// Space-delimited: maximal non-whitespace runs of the normalized text, edge
/// punctuation stripped, empties dropped. Contiguous: the normalized text as
/// a single unit (empty text gives no units).
pub fn segment(text: &str, mode: SegmentationMode) -> Vec<String> {
    let normalized = normalize(text);
    match mode {
        SegmentationMode::SpaceDelimited => space_tokens(&normalized)
            .map(str::to_string)
            .collect(),
        SegmentationMode::Contiguous if normalized.is_empty() => Vec::new(),
        SegmentationMode::Contiguous => vec![normalized],
    }
}

fn space_tokens(normalized: &str) -> impl Iterator<Item = &str> {
    normalized
        .split_whitespace()
        .map(strip_punctuation)
        .filter(|t| !t.is_empty())
}

pub fn compute_mkc(matched: &[KeywordMatch]) -> usize {
    let mut terms: Vec<&str> = matched.iter().map(|m| m.term.as_str()).collect();
    terms.sort_unstable();
    terms.dedup();
    terms.len()
}

/// Σ len(term)·count / text_len, with len in characters; 0 for empty text.
pub fn compute_dens(matched: &[KeywordMatch], text_len: usize) -> f64 {
    if text_len == 0 {
        return 0.0;
    }
    let covered: usize = matched.iter().map(|m| char_len(&m.term) * m.count).sum();
    covered as f64 / text_len as f64
}

/// A lexicon compiled for one segmentation mode. Build once, classify many.
pub struct KeywordMatcher {
    lang: String,
    mode: SegmentationMode,
    terms: Vec<String>,
    inner: Inner,
}

enum Inner {
    Contiguous(AhoCorasick),
    Space {
        /// First token → (term id, token count), longest first.
        by_first: HashMap<String, Vec<(usize, usize)>>,
        term_tokens: Vec<Vec<String>>,
    },
}

/// Raw match result before threshold comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub matched: Vec<KeywordMatch>,
    pub coverage: Vec<KeywordMatch>,
    pub text_len: usize,
}

impl KeywordMatcher {
    pub fn new(lex: &Lexicon, mode: SegmentationMode) -> Result<Self, FilterError> {
        let terms: Vec<String> = lex.terms().iter().cloned().collect();
        let inner = match mode {
            SegmentationMode::Contiguous => Inner::Contiguous(
                AhoCorasick::builder()
                    .match_kind(MatchKind::LeftmostLongest)
                    .build(&terms)?,
            ),
            SegmentationMode::SpaceDelimited => {
                let term_tokens: Vec<Vec<String>> = terms
                    .iter()
                    .map(|t| space_tokens(t).map(str::to_string).collect())
                    .collect();
                let mut by_first: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
                for (id, toks) in term_tokens.iter().enumerate() {
                    if let Some(first) = toks.first() {
                        by_first.entry(first.clone()).or_default().push((id, toks.len()));
                    }
                }
                for candidates in by_first.values_mut() {
                    candidates.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
                }
                Inner::Space {
                    by_first,
                    term_tokens,
                }
            }
        };
        Ok(Self {
            lang: lex.lang().to_string(),
            mode,
            terms,
            inner,
        })
    }

    pub fn lang(&self) -> &str {
        &self.lang
    }

    pub fn mode(&self) -> SegmentationMode {
        self.mode
    }

    pub fn find(&self, text: &str) -> MatchOutcome {
        let normalized = normalize(text);
        let text_len = char_len(&normalized);
        let n_terms = self.terms.len();
        match &self.inner {
            Inner::Contiguous(ac) => {
                let mut counts = vec![0usize; n_terms];
                for m in ac.find_iter(&normalized) {
                    counts[m.pattern().as_usize()] += 1;
                }
                let matched = self.collect(&counts);
                MatchOutcome {
                    coverage: matched.clone(),
                    matched,
                    text_len,
                }
            }
            Inner::Space {
                by_first,
                term_tokens,
            } => {
                let tokens: Vec<&str> = space_tokens(&normalized).collect();
                let mut independent = vec![0usize; n_terms];
                let mut attributed = vec![0usize; n_terms];
                let mut next_free = 0;
                for i in 0..tokens.len() {
                    let Some(candidates) = by_first.get(tokens[i]) else {
                        continue;
                    };
                    let mut longest = None;
                    for &(id, k) in candidates {
                        let end = i + k;
                        if end <= tokens.len()
                            && term_tokens[id][1..]
                                .iter()
                                .zip(&tokens[i + 1..end])
                                .all(|(a, b)| a == b)
                        {
                            independent[id] += 1;
                            if longest.is_none() {
                                longest = Some((id, k));
                            }
                        }
                    }
                    if i >= next_free {
                        if let Some((id, k)) = longest {
                            attributed[id] += 1;
                            next_free = i + k;
                        }
                    }
                }
                MatchOutcome {
                    matched: self.collect(&independent),
                    coverage: self.collect(&attributed),
                    text_len,
                }
            }
        }
    }

    fn collect(&self, counts: &[usize]) -> Vec<KeywordMatch> {
        // `terms` is already sorted (BTreeSet order).
        counts
            .iter()
            .zip(&self.terms)
            .filter(|(c, _)| **c > 0)
            .map(|(c, t)| KeywordMatch::new(t.clone(), *c))
            .collect()
    }

    pub fn classify(&self, text: &str, cfg: &MatchConfig) -> Result<FilterVerdict, FilterError> {
        if cfg.lang != self.lang {
            return Err(FilterError::LangMismatch {
                config: cfg.lang.clone(),
                lexicon: self.lang.clone(),
            });
        }
        let outcome = self.find(text);
        Ok(verdict(outcome, cfg))
    }
}

fn verdict(outcome: MatchOutcome, cfg: &MatchConfig) -> FilterVerdict {
    let mkc = compute_mkc(&outcome.matched);
    let dens = compute_dens(&outcome.coverage, outcome.text_len);
    FilterVerdict {
        mkc,
        dens,
        keep: mkc > cfg.t_c as usize && dens > cfg.t_d,
        matched: outcome.matched,
        coverage: outcome.coverage,
        text_len: outcome.text_len,
    }
}

/// Matched terms and counts in `text`, sorted by term.
pub fn match_keywords(text: &str, lex: &Lexicon, mode: SegmentationMode) -> Vec<KeywordMatch> {
    // Building the automaton can only fail on pathological pattern sets;
    // the lexicon invariants (non-empty, deduplicated) rule those out.
    KeywordMatcher::new(lex, mode)
        .expect("lexicon compiles to a keyword automaton")
        .find(text)
        .matched
}

/// One-shot classification. Prefer [`KeywordMatcher`] for many texts.
pub fn classify(text: &str, lex: &Lexicon, cfg: &MatchConfig) -> Result<FilterVerdict, FilterError> {
    if cfg.lang != lex.lang() {
        return Err(FilterError::LangMismatch {
            config: cfg.lang.clone(),
            lexicon: lex.lang().to_string(),
        });
    }
    KeywordMatcher::new(lex, cfg.mode)?.classify(text, cfg)
}
