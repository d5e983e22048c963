use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricError;

pub const BLEU_MAX_N: usize = 4;
pub const BLEU_WEIGHTS: [f64; BLEU_MAX_N] = [0.25; BLEU_MAX_N];

/// Candidate and reference tokens from the same tokenizer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedPair {
    pub candidate: Vec<String>,
    pub reference: Vec<String>,
    pub lang: String,
}

impl TokenizedPair {
    pub fn new<S: AsRef<str>>(candidate: &[S], reference: &[S], lang: &str) -> Self {
        Self {
            candidate: candidate.iter().map(|s| s.as_ref().to_string()).collect(),
            reference: reference.iter().map(|s| s.as_ref().to_string()).collect(),
            lang: lang.to_string(),
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            candidate: self.reference.clone(),
            reference: self.candidate.clone(),
            lang: self.lang.clone(),
        }
    }
}

/// What to do with a zero n-gram match count.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    /// Zero precision makes the score zero.
    #[default]
    None,
    /// Replace a zero match count by epsilon (the candidate still needs at
    /// least one n-gram of that order).
    AddEpsilon(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

pub fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// `(clipped matches, candidate n-grams, reference n-grams)`.
pub fn clipped_overlap(candidate: &[String], reference: &[String], n: usize) -> (usize, usize, usize) {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let overlap = cand
        .iter()
        .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    let total = |len: usize| (len + 1).saturating_sub(n);
    (overlap, total(candidate.len()), total(reference.len()))
}

/// 1 if the candidate is at least as long as the reference, else
/// exp(1 − r/c). An empty candidate gets 0.
pub fn brevity_penalty(candidate_len: usize, reference_len: usize) -> f64 {
    if candidate_len == 0 {
        0.0
    } else if candidate_len >= reference_len {
        1.0
    } else {
        (1.0 - reference_len as f64 / candidate_len as f64).exp()
    }
}

fn modified_precision(pair: &TokenizedPair, n: usize, smoothing: Smoothing) -> f64 {
    let (matches, total, _) = clipped_overlap(&pair.candidate, &pair.reference, n);
    if total == 0 {
        return 0.0;
    }
    let numerator = match (matches, smoothing) {
        (0, Smoothing::AddEpsilon(eps)) => eps,
        (m, _) => m as f64,
    };
    numerator / total as f64
}

pub fn bleu_n(pair: &TokenizedPair, n: usize) -> Result<f64, MetricError> {
    bleu_n_with(pair, n, Smoothing::None)
}

/// BLEU with all weight on order `n`: BP · P_n.
pub fn bleu_n_with(pair: &TokenizedPair, n: usize, smoothing: Smoothing) -> Result<f64, MetricError> {
    if n == 0 {
        return Err(MetricError::ZeroOrder);
    }
    let p = modified_precision(pair, n, smoothing);
    if p == 0.0 {
        return Ok(0.0);
    }
    Ok(brevity_penalty(pair.candidate.len(), pair.reference.len()) * p)
}

pub fn bleu(pair: &TokenizedPair) -> f64 {
    bleu_with(pair, Smoothing::None)
}

/// BP · exp(Σ 0.25 · log P_n) for n = 1..4.
pub fn bleu_with(pair: &TokenizedPair, smoothing: Smoothing) -> f64 {
    let mut log_sum = 0.0;
    for (i, w) in BLEU_WEIGHTS.iter().enumerate() {
        let p = modified_precision(pair, i + 1, smoothing);
        if p == 0.0 {
            return 0.0;
        }
        log_sum += w * p.ln();
    }
    brevity_penalty(pair.candidate.len(), pair.reference.len()) * log_sum.exp()
}

pub fn rouge_n(pair: &TokenizedPair, n: usize) -> Result<Prf, MetricError> {
    if n == 0 {
        return Err(MetricError::ZeroOrder);
    }
    let (overlap, cand_total, ref_total) = clipped_overlap(&pair.candidate, &pair.reference, n);
    if overlap == 0 {
        return Ok(Prf::default());
    }
    Ok(Prf::from_pr(
        overlap as f64 / cand_total as f64,
        overlap as f64 / ref_total as f64,
    ))
}

/// Length of the longest common subsequence, O(|a|·|b|) time, O(|b|) space.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l(pair: &TokenizedPair) -> Prf {
    let l = lcs_len(&pair.candidate, &pair.reference);
    if l == 0 {
        return Prf::default();
    }
    Prf::from_pr(
        l as f64 / pair.candidate.len() as f64,
        l as f64 / pair.reference.len() as f64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(c: &str, r: &str) -> TokenizedPair {
        let c: Vec<&str> = c.split_whitespace().collect();
        let r: Vec<&str> = r.split_whitespace().collect();
        TokenizedPair::new(&c, &r, "en")
    }

    #[test]
    fn bleu_identity() {
        let p = pair("the cat sat on the mat", "the cat sat on the mat");
        for n in 1..=4 {
            assert_eq!(bleu_n(&p, n).unwrap(), 1.0);
        }
        assert_eq!(bleu(&p), 1.0);
    }

    #[test]
    fn clipped_unigram() {
        let p = pair("the the the", "the cat");
        assert!((bleu_n(&p, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn no_overlap_and_empty() {
        assert_eq!(bleu_n(&pair("a b", "c d"), 1).unwrap(), 0.0);
        assert_eq!(bleu_n(&pair("", "c d"), 1).unwrap(), 0.0);
        assert_eq!(bleu(&pair("", "")), 0.0);
        assert_eq!(bleu_n(&pair("a", "a"), 0), Err(MetricError::ZeroOrder));
    }

    #[test]
    fn three_token_identity_has_no_four_grams() {
        let p = pair("a b c", "a b c");
        assert_eq!(bleu(&p), 0.0);
        // smoothing cannot invent 4-grams either
        assert_eq!(bleu_with(&p, Smoothing::AddEpsilon(0.1)), 0.0);
    }

    #[test]
    fn smoothing_rescues_zero_matches() {
        let p = pair("a b c d e", "a b c x e");
        assert_eq!(bleu(&p), 0.0); // no shared 4-gram
        assert!(bleu_with(&p, Smoothing::AddEpsilon(0.1)) > 0.0);
    }

    #[test]
    fn brevity() {
        assert_eq!(brevity_penalty(3, 2), 1.0);
        assert!((brevity_penalty(2, 4) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(brevity_penalty(0, 4), 0.0);
    }

    #[test]
    fn rouge_examples() {
        let r = rouge_n(&pair("a b", "b c"), 1).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.5, 0.5, 0.5));
        assert_eq!(rouge_n(&pair("a b c", "a b c"), 2).unwrap().f1, 1.0);
        assert_eq!(rouge_n(&pair("a b", "c d"), 1).unwrap(), Prf::default());
        assert_eq!(rouge_n(&pair("", ""), 1).unwrap(), Prf::default());
    }

    #[test]
    fn rouge_l_example() {
        let r = rouge_l(&pair("a x b", "a b y"));
        assert_eq!(lcs_len(&pair("a x b", "").candidate, &pair("a b y", "").candidate), 2);
        for v in [r.precision, r.recall, r.f1] {
            assert!((v - 2.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(rouge_l(&pair("a b", "a b")).f1, 1.0);
        assert_eq!(rouge_l(&pair("", "a")), Prf::default());
    }
}
