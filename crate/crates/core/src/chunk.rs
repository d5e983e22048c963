//! Fixed-size overlapping token windows for pretraining.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_CHUNK_SIZE: usize = 2048;
pub const DEFAULT_CHUNK_OVERLAP: usize = 512;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChunkError {
    #[error("chunk size {size} must exceed overlap {overlap}")]
    SizeNotAboveOverlap { size: usize, overlap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextChunk {
    pub doc_id: String,
    pub index: usize,
    pub start_offset: usize,
    pub tokens: Vec<String>,
}

/// Window boundaries `(start, end)` for a document of `n` tokens.
///
/// Windows start every `size - overlap` tokens. The first window that
/// reaches the end of the document is the last one, so a tail already
/// covered by the previous window never produces an extra chunk.
pub fn chunk_spans(n: usize, size: usize, overlap: usize) -> Result<Vec<(usize, usize)>, ChunkError> {
    if size <= overlap {
        return Err(ChunkError::SizeNotAboveOverlap { size, overlap });
    }
    let step = size - overlap;
    let mut spans = Vec::with_capacity(n / step + 1);
    let mut start = 0;
    while start < n {
        let end = (start + size).min(n);
        spans.push((start, end));
        if end == n {
            break;
        }
        start += step;
    }
    Ok(spans)
}

pub fn chunk_document<T: AsRef<str>>(
    doc_id: &str,
    tokens: &[T],
    size: usize,
    overlap: usize,
) -> Result<Vec<TextChunk>, ChunkError> {
    Ok(chunk_spans(tokens.len(), size, overlap)?
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| TextChunk {
            doc_id: doc_id.to_string(),
            index,
            start_offset: start,
            tokens: tokens[start..end].iter().map(|t| t.as_ref().to_string()).collect(),
        })
        .collect())
}
