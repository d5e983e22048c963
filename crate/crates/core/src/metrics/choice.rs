use std::collections::BTreeSet;

use super::MetricError;

/// Option letters, uppercase.
pub type AnswerSet = BTreeSet<char>;

const LETTERS: &str = "ABCDE";

/// Extract answer letters from free-form model output.
///
/// If the output contains an `Answer:` trailer, only the text after the last
/// one is scanned. Standalone uppercase letters A–E (word boundaries on both
/// sides) are collected. Lowercase letters are accepted too when the scanned
/// region consists of nothing but letters and separators, e.g. `"a, c"`, so
/// English articles in prose are not mistaken for answers. An empty set means
/// the output could not be parsed.
pub fn parse_answer(model_output: &str) -> AnswerSet {
    let region = last_answer_trailer(model_output).unwrap_or(model_output);
    let words: Vec<&str> = region
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    let bare = !words.is_empty()
        && words
            .iter()
            .all(|w| w.chars().count() == 1 && LETTERS.contains(w.to_ascii_uppercase().as_str()));
    words
        .iter()
        .filter(|w| w.chars().count() == 1)
        .filter_map(|w| w.chars().next())
        .filter(|c| if bare { c.is_ascii_alphabetic() } else { c.is_ascii_uppercase() })
        .map(|c| c.to_ascii_uppercase())
        .filter(|c| LETTERS.contains(*c))
        .collect()
}

fn last_answer_trailer(text: &str) -> Option<&str> {
    let lower = text.to_lowercase();
    // Lowercasing can change byte offsets for some scripts; only trust the
    // position when lengths agree.
    if lower.len() != text.len() {
        return text.rfind("Answer:").map(|i| &text[i + "Answer:".len()..]);
    }
    lower.rfind("answer:").map(|i| &text[i + "answer:".len()..])
}

/// Fraction of items whose predicted set equals the gold set exactly.
pub fn choice_accuracy(predictions: &[AnswerSet], gold: &[AnswerSet]) -> Result<f64, MetricError> {
    if predictions.len() != gold.len() {
        return Err(MetricError::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(MetricError::NoItems);
    }
    let correct = predictions
        .iter()
        .zip(gold)
        .filter(|(p, g)| !p.is_empty() && p == g)
        .count();
    Ok(correct as f64 / gold.len() as f64)
}
