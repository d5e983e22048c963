//! Text normalization shared by lexicon terms and document text.
//!
//! Both sides of keyword matching go through the same pipeline: Unicode
//! default case folding followed by NFC composition. Matching is therefore
//! insensitive to case and to canonical composition differences.

use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

/// Whether keyword matching folds case. Exposed so reports can state it.
pub const CASE_INSENSITIVE_MATCHING: bool = true;

/// Case-fold and NFC-compose `text`.
pub fn normalize(text: &str) -> String {
    // Folding can emit decomposed sequences, so compose after folding. The
    // leading NFC makes the fold see canonical input.
    let composed: String = text.nfc().collect();
    let folded = if CASE_INSENSITIVE_MATCHING {
        caseless::default_case_fold_str(&composed)
    } else {
        composed
    };
    folded.nfc().collect()
}

/// Unicode general category P* (connector, dash, open, close, initial,
/// final, other punctuation).
pub fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Strip leading and trailing punctuation from a single word.
pub fn strip_punctuation(word: &str) -> &str {
    word.trim_matches(is_punctuation)
}

/// Normal form of a lexicon entry: [`normalize`], then each
/// whitespace-separated word stripped of edge punctuation, empty words
/// dropped, words rejoined with a single space.
///
/// This is the same treatment the space-delimited segmenter gives document
/// tokens, so a term always matches its own segmentation.
pub fn normalize_term(term: &str) -> String {
    let normalized = normalize(term);
    let mut out = String::with_capacity(normalized.len());
    for word in normalized.split_whitespace().map(strip_punctuation) {
        if word.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Length in Unicode scalar values.
pub fn char_len(s: &str) -> usize {
    s.chars().count()
}
