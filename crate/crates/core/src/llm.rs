//! Abstract request/response LLM client, offline stubs, and the topic and
//! rationale workflows built on it.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompts::{build_prompt, PromptKind, SUBJECTS_KEY};
use crate::qa::{QAItem, TopicList};

pub const DEFAULT_TOPIC_ATTEMPTS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("item {id}: {reason}")]
    Precondition { id: String, reason: String },
    #[error("stub: {0}")]
    Stub(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmOptions {
    pub model: String,
    pub temperature: f64,
    /// Extra tries after a transport failure, per request.
    pub transport_retries: usize,
}

impl Default for LlmOptions {
    fn default() -> Self {
        Self {
            model: "gpt-4".into(),
            temperature: 0.0,
            transport_retries: 2,
        }
    }
}

fn send(client: &dyn LlmClient, opts: &LlmOptions, prompt: String) -> Result<String, LlmError> {
    let req = LlmRequest {
        model: opts.model.clone(),
        prompt,
        temperature: opts.temperature,
    };
    let mut last = None;
    for attempt in 0..=opts.transport_retries {
        match client.complete(&req) {
            Ok(text) => return Ok(text),
            Err(e @ LlmError::Transport(_)) => {
                log::warn!("request failed (try {}): {e}", attempt + 1);
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| LlmError::Transport("no attempts made".into())))
}

/// English name used in prompts for a language code; unknown codes pass
/// through.
pub fn language_name(code: &str) -> &str {
    match code {
        "en" => "English",
        "zh" => "Chinese",
        "ja" => "Japanese",
        "fr" => "French",
        "ru" => "Russian",
        "es" => "Spanish",
        other => other,
    }
}

/// Ask for a topic up to `max_attempts` times, accepting only exact members
/// of `topics` (surrounding whitespace ignored). Falls back to `None`.
pub fn classify_topic(
    item: &QAItem,
    client: &dyn LlmClient,
    topics: &TopicList,
    max_attempts: usize,
    opts: &LlmOptions,
) -> Result<String, LlmError> {
    let extras = [(SUBJECTS_KEY.to_string(), topics.subjects_string())].into();
    let prompt = build_prompt(PromptKind::TopicClassify, language_name(&item.lang), item, &extras)
        .expect("subjects extra is supplied");
    for attempt in 1..=max_attempts {
        let answer = send(client, opts, prompt.clone())?;
        let answer = answer.trim();
        if topics.contains(answer) {
            return Ok(answer.to_string());
        }
        log::debug!("item {}: attempt {attempt} answered {answer:?}", item.id);
    }
    Ok(topics.fallback().to_string())
}

/// Generate an unverified rationale for an item with gold answers.
pub fn generate_rationale(item: &QAItem, client: &dyn LlmClient, opts: &LlmOptions) -> Result<QAItem, LlmError> {
    if item.answers.is_empty() {
        return Err(LlmError::Precondition {
            id: item.id.clone(),
            reason: "no gold answers".into(),
        });
    }
    let prompt = build_prompt(
        PromptKind::RationaleGen,
        language_name(&item.lang),
        item,
        &Default::default(),
    )
    .expect("rationale prompt has no extras");
    let text = send(client, opts, prompt)?;
    let mut out = item.clone();
    out.rationale = Some(text.trim().to_string());
    out.human_verified = false;
    Ok(out)
}

/// Run `f` over `items` with at most `max_in_flight` concurrent calls.
/// Results keep input order.
pub fn map_bounded<T, R, F>(items: &[T], max_in_flight: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = max_in_flight.max(1).min(items.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("slot lock")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("slot lock")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

pub fn generate_rationales(
    items: &[QAItem],
    client: &dyn LlmClient,
    opts: &LlmOptions,
    max_in_flight: usize,
) -> Vec<Result<QAItem, LlmError>> {
    map_bounded(items, max_in_flight, |it| generate_rationale(it, client, opts))
}

/// Replies from a fixed script, in order, and records every prompt.
#[derive(Debug, Default)]
pub struct ScriptedClient {
    replies: Mutex<VecDeque<Result<String, LlmError>>>,
    seen: Mutex<Vec<LlmRequest>>,
    repeat_last: bool,
}

impl ScriptedClient {
    pub fn new(replies: impl IntoIterator<Item = Result<String, LlmError>>) -> Self {
        Self {
            replies: Mutex::new(replies.into_iter().collect()),
            ..Default::default()
        }
    }

    /// Always answer `text`.
    pub fn constant(text: &str) -> Self {
        Self {
            replies: Mutex::new([Ok(text.to_string())].into()),
            repeat_last: true,
            ..Default::default()
        }
    }

    pub fn requests(&self) -> Vec<LlmRequest> {
        self.seen.lock().expect("lock").clone()
    }
}

impl LlmClient for ScriptedClient {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        self.seen.lock().expect("lock").push(request.clone());
        let mut q = self.replies.lock().expect("lock");
        if self.repeat_last && q.len() == 1 {
            return q[0].clone();
        }
        q.pop_front()
            .unwrap_or_else(|| Err(LlmError::Stub("script exhausted".into())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubRule {
    /// Substring the prompt must contain; empty matches anything.
    #[serde(default, rename = "match")]
    pub pattern: String,
    pub response: String,
}

/// Answers from a JSON-lines file of `{"match", "response"}` rules; the first
/// rule whose pattern occurs in the prompt wins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileClient {
    rules: Vec<StubRule>,
}

impl FileClient {
    pub fn new(rules: Vec<StubRule>) -> Self {
        Self { rules }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| LlmError::Stub(format!("{}: {e}", path.display())))?;
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rule = serde_json::from_str(line)
                .map_err(|e| LlmError::Stub(format!("{}:{}: {e}", path.display(), i + 1)))?;
            rules.push(rule);
        }
        Ok(Self { rules })
    }
}

impl LlmClient for FileClient {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        self.rules
            .iter()
            .find(|r| request.prompt.contains(&r.pattern))
            .map(|r| r.response.clone())
            .ok_or_else(|| LlmError::Stub("no rule matches the prompt".into()))
    }
}
