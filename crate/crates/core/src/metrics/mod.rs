//! Rationale and choice metrics: BLEU, ROUGE-N/L, idf-weighted embedding
//! similarity, and multiple-choice accuracy.

mod choice;
mod embed;
mod ngram;

pub use choice::{choice_accuracy, parse_answer, AnswerSet};
pub use embed::{compute_idf, embed_score, EmbedScore, IdfTable, Orientation, TokenEmbeddings};
pub use ngram::{
    bleu, bleu_n, bleu_n_with, bleu_with, brevity_penalty, clipped_overlap, lcs_len, ngram_counts,
    rouge_l, rouge_n, Prf, Smoothing, TokenizedPair, BLEU_MAX_N, BLEU_WEIGHTS,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{tokens} tokens but {vectors} vectors")]
    TokenVectorMismatch { tokens: usize, vectors: usize },
    #[error("idf reference corpus is empty")]
    EmptyCorpus,
    #[error("prediction count {predictions} differs from gold count {gold}")]
    LengthMismatch { predictions: usize, gold: usize },
    #[error("no items to score")]
    NoItems,
}
