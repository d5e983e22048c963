//! Multiple-choice QA items, seeded splitting and dataset statistics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenize::Tokenizer;
use crate::util::stable_hash64;

pub const DEFAULT_SPLIT_SEED: u64 = 42;
pub const DEFAULT_SPLIT_RATIOS: (u32, u32, u32) = (8, 1, 1);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QaError {
    #[error("item {id}: {reason}")]
    InvalidItem { id: String, reason: String },
    #[error("cannot split an empty item list")]
    Empty,
    #[error("split ratios must be positive, got {0}:{1}:{2}")]
    BadRatios(u32, u32, u32),
    #[error("duplicate item id {0}")]
    DuplicateId(String),
    #[error("invalid topic list: {0}")]
    BadTopics(String),
}

/// One QA pair. Binary questions are two options.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAItem {
    pub id: String,
    pub lang: String,
    pub question: String,
    pub options: BTreeMap<String, String>,
    pub answers: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    #[serde(default)]
    pub human_verified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
}

impl QAItem {
    fn invalid(&self, reason: impl Into<String>) -> QaError {
        QaError::InvalidItem {
            id: self.id.clone(),
            reason: reason.into(),
        }
    }

    /// Option letters must run A, B, C… without gaps, and answers must be a
    /// non-empty subset of them.
    pub fn validate(&self) -> Result<(), QaError> {
        if self.id.is_empty() {
            return Err(self.invalid("empty id"));
        }
        if self.options.len() < 2 {
            return Err(self.invalid("fewer than 2 options"));
        }
        if self.options.len() > 26 {
            return Err(self.invalid("more than 26 options"));
        }
        for (i, key) in self.options.keys().enumerate() {
            let expected = char::from(b'A' + i as u8).to_string();
            if *key != expected {
                return Err(self.invalid(format!("option letters not contiguous at {key:?}")));
            }
        }
        if self.answers.is_empty() {
            return Err(self.invalid("no gold answers"));
        }
        if let Some(a) = self.answers.iter().find(|a| !self.options.contains_key(*a)) {
            return Err(self.invalid(format!("answer {a} is not an option")));
        }
        Ok(())
    }

    pub fn is_single_answer(&self) -> bool {
        self.answers.len() == 1
    }

    /// Answers joined as `A, B`.
    pub fn answer_string(&self) -> String {
        self.answers.iter().cloned().collect::<Vec<_>>().join(", ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub ratios: (u32, u32, u32),
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            ratios: DEFAULT_SPLIT_RATIOS,
            seed: DEFAULT_SPLIT_SEED,
        }
    }
}

impl SplitSpec {
    /// Cut points `(⌊a·n/t⌋, ⌊(a+b)·n/t⌋)` with t = a + b + c.
    pub fn cuts(&self, n: usize) -> Result<(usize, usize), QaError> {
        let (a, b, c) = self.ratios;
        if a == 0 || b == 0 || c == 0 {
            return Err(QaError::BadRatios(a, b, c));
        }
        let t = u64::from(a + b + c);
        let n64 = n as u64;
        let first = n64 * u64::from(a) / t;
        let second = n64 * u64::from(a + b) / t;
        Ok((first as usize, second as usize))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<QAItem>,
    pub val: Vec<QAItem>,
    pub test: Vec<QAItem>,
}

fn shuffle_key(seed: u64, id: &str) -> u64 {
    stable_hash64(&[&seed.to_le_bytes(), id.as_bytes()])
}

/// Shuffle by a seeded hash of each id, then cut into train/val/test. The
/// result depends only on the ids and the seed, not on input order.
pub fn split_dataset(items: &[QAItem], spec: &SplitSpec) -> Result<Split, QaError> {
    if items.is_empty() {
        return Err(QaError::Empty);
    }
    let (first, second) = spec.cuts(items.len())?;
    let mut keyed: Vec<(u64, &QAItem)> = items.iter().map(|it| (shuffle_key(spec.seed, &it.id), it)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
    for w in keyed.windows(2) {
        if w[0].1.id == w[1].1.id {
            return Err(QaError::DuplicateId(w[0].1.id.clone()));
        }
    }
    let mut split = Split::default();
    for (i, (_, item)) in keyed.into_iter().enumerate() {
        let part = if i < first {
            &mut split.train
        } else if i < second {
            &mut split.val
        } else {
            &mut split.test
        };
        part.push(item.clone());
    }
    Ok(split)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QaStats {
    pub items: usize,
    pub single_answer: usize,
    pub multi_answer: usize,
    /// Percentage of single-answer items.
    pub single_answer_pct: f64,
    pub avg_question_tokens: f64,
    /// All options of an item together.
    pub avg_option_tokens: f64,
    pub with_rationale: usize,
    /// Over items that have a rationale.
    pub avg_rationale_tokens: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub tokenizer: String,
    pub overall: QaStats,
    pub per_language: BTreeMap<String, QaStats>,
}

#[derive(Default)]
struct StatsAcc {
    items: usize,
    single: usize,
    question: usize,
    options: usize,
    rationales: usize,
    rationale_tokens: usize,
}

impl StatsAcc {
    fn finish(&self) -> QaStats {
        let per_item = |x: usize| if self.items == 0 { 0.0 } else { x as f64 / self.items as f64 };
        QaStats {
            items: self.items,
            single_answer: self.single,
            multi_answer: self.items - self.single,
            single_answer_pct: 100.0 * per_item(self.single),
            avg_question_tokens: per_item(self.question),
            avg_option_tokens: per_item(self.options),
            with_rationale: self.rationales,
            avg_rationale_tokens: if self.rationales == 0 {
                0.0
            } else {
                self.rationale_tokens as f64 / self.rationales as f64
            },
        }
    }
}

pub fn dataset_stats(items: &[QAItem], tokenizer: &dyn Tokenizer) -> StatsReport {
    let mut overall = StatsAcc::default();
    let mut per_lang: BTreeMap<String, StatsAcc> = BTreeMap::new();
    for item in items {
        let q = tokenizer.count(&item.question);
        let o: usize = item.options.values().map(|t| tokenizer.count(t)).sum();
        let r = item.rationale.as_deref().map(|t| tokenizer.count(t));
        for acc in [&mut overall, per_lang.entry(item.lang.clone()).or_default()] {
            acc.items += 1;
            acc.single += usize::from(item.is_single_answer());
            acc.question += q;
            acc.options += o;
            if let Some(r) = r {
                acc.rationales += 1;
                acc.rationale_tokens += r;
            }
        }
    }
    StatsReport {
        tokenizer: tokenizer.name().to_string(),
        overall: overall.finish(),
        per_language: per_lang.into_iter().map(|(l, a)| (l, a.finish())).collect(),
    }
}

pub const TOPIC_FALLBACK: &str = "None";

pub const DEFAULT_TOPICS: [&str; 20] = [
    "Internal Medicine",
    "Biochemistry",
    "Pharmacology",
    "Psychiatry",
    "Microbiology",
    "Physiology",
    "Pathology",
    "Immunology",
    "Obstetrics and Gynecology",
    "Public Health",
    "Hematology",
    "Surgery",
    "Emergency Medicine",
    "Orthopedics",
    "Neurology",
    "Anatomy",
    "Medical Genetics",
    "Radiology",
    "Dermatology",
    "Endocrinology",
];

/// Ordered topic names plus the `None` fallback.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicList {
    names: Vec<String>,
}

impl Default for TopicList {
    fn default() -> Self {
        Self {
            names: DEFAULT_TOPICS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl TopicList {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, QaError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut seen = BTreeSet::new();
        for n in &names {
            if n.trim().is_empty() {
                return Err(QaError::BadTopics("empty topic name".into()));
            }
            if n == TOPIC_FALLBACK {
                return Err(QaError::BadTopics(format!("{TOPIC_FALLBACK:?} is reserved")));
            }
            if !seen.insert(n.as_str()) {
                return Err(QaError::BadTopics(format!("duplicate topic {n:?}")));
            }
        }
        if names.is_empty() {
            return Err(QaError::BadTopics("no topics".into()));
        }
        Ok(Self { names })
    }

    /// One topic per line; blank lines are skipped.
    pub fn from_lines(text: &str) -> Result<Self, QaError> {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn fallback(&self) -> &str {
        TOPIC_FALLBACK
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    /// Names joined with ", ", for the classification prompt.
    pub fn subjects_string(&self) -> String {
        self.names.join(", ")
    }
}
