//! Multilingual medical corpus construction and benchmark evaluation.
//!
//! Keyword filtering of web text, chunking, review sampling, OCR reading
//! order, rationale and choice metrics, ranking analysis, QA dataset
//! handling, prompt templates, and the annotation store used by the review
//! service.

pub mod chunk;
pub mod config;
pub mod corpus;
pub mod filter;
pub mod lexicon;
pub mod llm;
pub mod metrics;
pub mod ocr;
pub mod prompts;
pub mod qa;
pub mod rating;
pub mod review;
pub mod sample;
pub mod text;
pub mod tokenize;
pub mod util;

pub use chunk::{chunk_document, chunk_spans, TextChunk, DEFAULT_CHUNK_OVERLAP, DEFAULT_CHUNK_SIZE};
pub use config::{FilterConfig, LangSetting};
pub use corpus::{
    filter_stream, AnnotatedRecord, CorpusFilter, CorpusRecord, FilterStats, Reject, StreamOptions,
};
pub use filter::{
    classify, match_keywords, FilterVerdict, KeywordMatch, KeywordMatcher, MatchConfig, SegmentationMode,
};
pub use lexicon::{load_lexicon, load_lexicon_dir, Lexicon};
pub use metrics::{AnswerSet, EmbedScore, IdfTable, Prf, TokenEmbeddings, TokenizedPair};
pub use ocr::{reading_order, PageExclusions, TextBox};
pub use prompts::{build_prompt, PromptKind};
pub use qa::{split_dataset, QAItem, SplitSpec, TopicList};
pub use rating::{aggregate_ratings, kendall_tau, ranks_to_scores, RankingMode, RankingRecord, ScoreMatrix};
pub use review::{ReviewCase, ReviewStore, Submission, TaskKind};
pub use tokenize::{DefaultTokenizer, Tokenizer};
