//! Streaming corpus filtering over JSON-lines records.
//!
//! Each input line is one [`CorpusRecord`]. Accepted records are written
//! back with `mkc`, `dens` and `keep` appended; lines that cannot be
//! processed go to a rejects sink with a reason. Nothing is dropped
//! silently.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::sync::{mpsc, Arc};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::FilterConfig;
use crate::filter::{FilterError, FilterVerdict, KeywordMatcher, MatchConfig};
use crate::lexicon::Lexicon;
use crate::text::char_len;
use crate::tokenize::Tokenizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    FilteredWeb,
    Textbook,
    Website,
    OpenDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub lang: String,
    pub text: String,
    pub source: Source,
    #[serde(default)]
    pub meta: serde_json::Map<String, serde_json::Value>,
}

/// A record with its filter decision, as written to the output stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedRecord {
    #[serde(flatten)]
    pub record: CorpusRecord,
    pub mkc: usize,
    pub dens: f64,
    pub keep: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectKind {
    Malformed,
    UnknownLang,
    EmptyId,
    DuplicateId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    /// 1-based input line number.
    pub line: u64,
    pub kind: RejectKind,
    pub reason: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub raw: String,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// Per-language counters. Only accepted (non-rejected) records count.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LangCounters {
    pub documents_in: u64,
    pub documents_kept: u64,
    pub characters_in: u64,
    pub characters_kept: u64,
    pub tokens_in: u64,
    pub tokens_kept: u64,
}

impl LangCounters {
    fn add(&mut self, kept: bool, chars: u64, tokens: u64) {
        self.documents_in += 1;
        self.characters_in += chars;
        self.tokens_in += tokens;
        if kept {
            self.documents_kept += 1;
            self.characters_kept += chars;
            self.tokens_kept += tokens;
        }
    }

    pub fn merge(&mut self, other: &LangCounters) {
        self.documents_in += other.documents_in;
        self.documents_kept += other.documents_kept;
        self.characters_in += other.characters_in;
        self.characters_kept += other.characters_kept;
        self.tokens_in += other.tokens_in;
        self.tokens_kept += other.tokens_kept;
    }

    /// Kept documents over input documents; 0 when nothing came in.
    pub fn remain_ratio(&self) -> f64 {
        ratio(self.documents_kept, self.documents_in)
    }

    pub fn char_remain_ratio(&self) -> f64 {
        ratio(self.characters_kept, self.characters_in)
    }

    pub fn token_remain_ratio(&self) -> f64 {
        ratio(self.tokens_kept, self.tokens_in)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterStats {
    pub per_lang: BTreeMap<String, LangCounters>,
    pub rejected: u64,
    pub tokenizer: String,
}

impl FilterStats {
    pub fn lang(&self, lang: &str) -> LangCounters {
        self.per_lang.get(lang).cloned().unwrap_or_default()
    }

    pub fn total(&self) -> LangCounters {
        let mut t = LangCounters::default();
        for c in self.per_lang.values() {
            t.merge(c);
        }
        t
    }

    pub fn record(&mut self, lang: &str, kept: bool, chars: u64, tokens: u64) {
        self.per_lang
            .entry(lang.to_string())
            .or_default()
            .add(kept, chars, tokens);
    }

    /// JSON report with all three remain ratios per language.
    pub fn to_report(&self) -> serde_json::Value {
        fn entry(c: &LangCounters) -> serde_json::Value {
            serde_json::json!({
                "documents_in": c.documents_in,
                "documents_kept": c.documents_kept,
                "remain_ratio": c.remain_ratio(),
                "characters_in": c.characters_in,
                "characters_kept": c.characters_kept,
                "char_remain_ratio": c.char_remain_ratio(),
                "tokens_in": c.tokens_in,
                "tokens_kept": c.tokens_kept,
                "token_remain_ratio": c.token_remain_ratio(),
            })
        }
        let langs: serde_json::Map<_, _> = self
            .per_lang
            .iter()
            .map(|(k, v)| (k.clone(), entry(v)))
            .collect();
        serde_json::json!({
            "tokenizer": self.tokenizer,
            "languages": langs,
            "total": entry(&self.total()),
            "rejected": self.rejected,
        })
    }
}

/// Compiled lexicons and thresholds for every configured language.
pub struct CorpusFilter {
    langs: HashMap<String, (KeywordMatcher, MatchConfig)>,
    tokenizer: Arc<dyn Tokenizer>,
}

/// Result of processing one record in the parallel stage.
#[derive(Debug, Clone)]
pub enum Processed {
    Accepted {
        line: u64,
        annotated: AnnotatedRecord,
        verdict: FilterVerdict,
        chars: u64,
        tokens: u64,
    },
    Rejected(Reject),
}

impl CorpusFilter {
    /// Pair each lexicon with its config. Languages present in only one of
    /// the two are skipped with a warning; their records will be rejected.
    pub fn new(
        lexicons: impl IntoIterator<Item = Lexicon>,
        config: &FilterConfig,
        tokenizer: Arc<dyn Tokenizer>,
    ) -> Result<Self, FilterError> {
        let mut langs = HashMap::new();
        for lex in lexicons {
            let Some(cfg) = config.get(lex.lang()) else {
                log::warn!("lexicon for '{}' has no threshold config; skipping", lex.lang());
                continue;
            };
            let matcher = KeywordMatcher::new(&lex, cfg.mode)?;
            langs.insert(lex.lang().to_string(), (matcher, cfg.clone()));
        }
        for lang in config.langs() {
            if !langs.contains_key(lang) {
                log::warn!("config for '{lang}' has no lexicon; its records will be rejected");
            }
        }
        Ok(Self { langs, tokenizer })
    }

    pub fn tokenizer(&self) -> &dyn Tokenizer {
        self.tokenizer.as_ref()
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.langs.keys().map(String::as_str)
    }

    pub fn classify(&self, record: &CorpusRecord) -> Option<FilterVerdict> {
        let (matcher, cfg) = self.langs.get(&record.lang)?;
        Some(matcher.classify(&record.text, cfg).expect("matcher built for this config"))
    }

    pub fn process_record(&self, line: u64, raw: &str, record: CorpusRecord) -> Processed {
        let reject = |kind, reason: String, id: Option<String>| {
            Processed::Rejected(Reject {
                line,
                kind,
                reason,
                id,
                raw: raw.to_string(),
            })
        };
        if record.id.trim().is_empty() {
            return reject(RejectKind::EmptyId, "record id is empty".into(), None);
        }
        let Some(verdict) = self.classify(&record) else {
            let reason = format!("no lexicon/config for language '{}'", record.lang);
            return reject(RejectKind::UnknownLang, reason, Some(record.id));
        };
        let chars = char_len(&record.text) as u64;
        let tokens = self.tokenizer.count(&record.text) as u64;
        Processed::Accepted {
            line,
            annotated: AnnotatedRecord {
                record,
                mkc: verdict.mkc,
                dens: verdict.dens,
                keep: verdict.keep,
            },
            verdict,
            chars,
            tokens,
        }
    }

    pub fn process_line(&self, line: u64, raw: &str) -> Processed {
        match serde_json::from_str::<CorpusRecord>(raw) {
            Ok(record) => self.process_record(line, raw, record),
            Err(e) => Processed::Rejected(Reject {
                line,
                kind: RejectKind::Malformed,
                reason: e.to_string(),
                id: None,
                raw: raw.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StreamOptions {
    /// Emit output in input order. Unordered mode writes results as workers
    /// finish them.
    pub ordered: bool,
    /// Lines per parallel batch in ordered mode.
    pub batch_size: usize,
    /// Write only records with `keep = true`.
    pub kept_only: bool,
}

impl Default for StreamOptions {
    fn default() -> Self {
        Self {
            ordered: true,
            batch_size: 4096,
            kept_only: false,
        }
    }
}

/// Sequential sink: duplicate-id detection, stats, and writes.
struct Sink<'a, W, X> {
    out: &'a mut W,
    rejects: &'a mut X,
    seen: HashSet<String>,
    stats: FilterStats,
    kept_only: bool,
}

impl<W: Write, X: Write> Sink<'_, W, X> {
    fn accept(&mut self, p: Processed) -> Result<(), PipelineError> {
        match p {
            Processed::Accepted {
                line,
                annotated,
                chars,
                tokens,
                ..
            } => {
                if !self.seen.insert(annotated.record.id.clone()) {
                    let raw = serde_json::to_string(&annotated.record)?;
                    let reject = Reject {
                        line,
                        kind: RejectKind::DuplicateId,
                        reason: format!("duplicate id '{}'", annotated.record.id),
                        id: Some(annotated.record.id),
                        raw,
                    };
                    return self.reject(reject);
                }
                self.stats
                    .record(&annotated.record.lang, annotated.keep, chars, tokens);
                if annotated.keep || !self.kept_only {
                    serde_json::to_writer(&mut *self.out, &annotated)?;
                    self.out.write_all(b"\n")?;
                }
                Ok(())
            }
            Processed::Rejected(r) => self.reject(r),
        }
    }

    fn reject(&mut self, r: Reject) -> Result<(), PipelineError> {
        self.stats.rejected += 1;
        serde_json::to_writer(&mut *self.rejects, &r)?;
        self.rejects.write_all(b"\n")?;
        Ok(())
    }
}

/// Filter a JSON-lines stream. Blank lines are skipped.
pub fn filter_stream<R, W, X>(
    filter: &CorpusFilter,
    input: R,
    out: &mut W,
    rejects: &mut X,
    opts: StreamOptions,
) -> Result<FilterStats, PipelineError>
where
    R: BufRead + Send,
    W: Write,
    X: Write,
{
    let mut sink = Sink {
        out,
        rejects,
        seen: HashSet::new(),
        stats: FilterStats {
            tokenizer: filter.tokenizer.name().to_string(),
            ..FilterStats::default()
        },
        kept_only: opts.kept_only,
    };
    if opts.ordered {
        let batch_size = opts.batch_size.max(1);
        let mut batch: Vec<(u64, String)> = Vec::with_capacity(batch_size);
        let mut lines = input.lines();
        let mut line_no = 0u64;
        loop {
            batch.clear();
            for line in lines.by_ref() {
                line_no += 1;
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                batch.push((line_no, line));
                if batch.len() == batch_size {
                    break;
                }
            }
            if batch.is_empty() {
                break;
            }
            let processed: Vec<Processed> = batch
                .par_iter()
                .map(|(n, l)| filter.process_line(*n, l))
                .collect();
            for p in processed {
                sink.accept(p)?;
            }
        }
    } else {
        let (tx, rx) = mpsc::sync_channel::<Result<Processed, std::io::Error>>(1024);
        std::thread::scope(|scope| -> Result<(), PipelineError> {
            scope.spawn(move || {
                input
                    .lines()
                    .enumerate()
                    .par_bridge()
                    .for_each_with(tx, |tx, (i, line)| {
                        let msg = line.map(|l| {
                            if l.trim().is_empty() {
                                None
                            } else {
                                Some(filter.process_line(i as u64 + 1, &l))
                            }
                        });
                        let _ = match msg {
                            Ok(Some(p)) => tx.send(Ok(p)),
                            Ok(None) => Ok(()),
                            Err(e) => tx.send(Err(e)),
                        };
                    });
            });
            for msg in rx {
                sink.accept(msg?)?;
            }
            Ok(())
        })?;
    }
    sink.out.flush()?;
    sink.rejects.flush()?;
    Ok(sink.stats)
}
