//! Idf-weighted greedy cosine matching over precomputed token embeddings.
//!
//! No model inference happens here; vectors come from an external provider
//! and are expected to be unit length, so dot products are cosines. Scores
//! are not baseline-rescaled.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::MetricError;

/// Smoothed inverse document frequency: ln((N + 1) / (df + 1)).
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    weights: HashMap<String, f64>,
    doc_count: usize,
    unseen: f64,
}

impl IdfTable {
    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    /// Weight for tokens absent from the reference corpus: ln(N + 1).
    pub fn unseen_weight(&self) -> f64 {
        self.unseen
    }

    pub fn weight(&self, token: &str) -> f64 {
        self.weights.get(token).copied().unwrap_or(self.unseen)
    }

    /// Weight 1 for every token.
    pub fn uniform() -> Self {
        Self {
            weights: HashMap::new(),
            doc_count: 0,
            unseen: 1.0,
        }
    }
}

/// Build an idf table from tokenized reference documents.
pub fn compute_idf<D, T>(corpus: &[D]) -> Result<IdfTable, MetricError>
where
    D: AsRef<[T]>,
    T: AsRef<str>,
{
    if corpus.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    for doc in corpus {
        let unique: HashSet<&str> = doc.as_ref().iter().map(|t| t.as_ref()).collect();
        for t in unique {
            *df.entry(t.to_string()).or_insert(0) += 1;
        }
    }
    let n = corpus.len();
    let weights = df
        .into_iter()
        .map(|(t, d)| (t, (((n + 1) as f64) / ((d + 1) as f64)).ln()))
        .collect();
    Ok(IdfTable {
        weights,
        doc_count: n,
        unseen: ((n + 1) as f64).ln(),
    })
}

/// Tokens and their embedding vectors, one vector per token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenEmbeddings {
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

impl TokenEmbeddings {
    pub fn new(tokens: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        if tokens.len() != vectors.len() {
            return Err(MetricError::TokenVectorMismatch {
                tokens: tokens.len(),
                vectors: vectors.len(),
            });
        }
        Ok(Self { tokens, vectors })
    }

    fn weights(&self, idf: &IdfTable) -> Vec<f64> {
        self.tokens.iter().map(|t| idf.weight(t)).collect()
    }
}

/// Which side the returned `recall` sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Recall sums over candidate tokens, each matched against the best
    /// reference token. Precision is the mirror image.
    #[default]
    CandidateRecall,
    /// Recall sums over reference tokens (precision over candidate tokens).
    ReferenceRecall,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EmbedScore {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    /// Some side had zero total idf weight and fell back to an unweighted mean.
    pub unweighted_fallback: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Σ w_i · max_j ⟨from_i, to_j⟩ / Σ w_i. Returns the score and whether the
/// unweighted fallback was used.
fn greedy_match(from: &[Vec<f64>], weights: &[f64], to: &[Vec<f64>]) -> (f64, bool) {
    if from.is_empty() || to.is_empty() {
        return (0.0, false);
    }
    let best: Vec<f64> = from
        .iter()
        .map(|x| to.iter().map(|y| dot(x, y)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        let num: f64 = best.iter().zip(weights).map(|(b, w)| b * w).sum();
        (num / total, false)
    } else {
        log::warn!("zero total idf weight; using unweighted mean");
        (best.iter().sum::<f64>() / best.len() as f64, true)
    }
}

fn check_dims(cand: &TokenEmbeddings, refs: &TokenEmbeddings) -> Result<(), MetricError> {
    for side in [cand, refs] {
        if side.tokens.len() != side.vectors.len() {
            return Err(MetricError::TokenVectorMismatch {
                tokens: side.tokens.len(),
                vectors: side.vectors.len(),
            });
        }
    }
    let mut all = cand.vectors.iter().chain(&refs.vectors);
    if let Some(first) = all.next() {
        let expected = first.len();
        for v in all {
            if v.len() != expected {
                return Err(MetricError::DimensionMismatch {
                    expected,
                    found: v.len(),
                });
            }
        }
    }
    Ok(())
}

pub fn embed_score(
    cand: &TokenEmbeddings,
    refs: &TokenEmbeddings,
    idf: &IdfTable,
    orientation: Orientation,
) -> Result<EmbedScore, MetricError> {
    check_dims(cand, refs)?;
    let (over_cand, fb_c) = greedy_match(&cand.vectors, &cand.weights(idf), &refs.vectors);
    let (over_ref, fb_r) = greedy_match(&refs.vectors, &refs.weights(idf), &cand.vectors);
    let (recall, precision) = match orientation {
        Orientation::CandidateRecall => (over_cand, over_ref),
        Orientation::ReferenceRecall => (over_ref, over_cand),
    };
    let f1 = if recall + precision != 0.0 {
        2.0 * recall * precision / (recall + precision)
    } else {
        0.0
    };
    Ok(EmbedScore {
        recall,
        precision,
        f1,
        unweighted_fallback: fb_c || fb_r,
    })
}
