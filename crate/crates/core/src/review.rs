//! Annotation store behind the review service: anonymized cases, per
//! annotator task queues, an append-only submission log, and export back to
//! model ids.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rating::{RankingMode, RankingRecord};
use crate::util::stable_hash64;

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {reason}")]
    Parse { path: String, line: usize, reason: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unknown case {0}")]
    UnknownCase(String),
    #[error("case {case_id} was not served to {annotator} for {kind}")]
    NotServed {
        case_id: String,
        annotator: String,
        kind: TaskKind,
    },
    #[error("{annotator} already submitted {kind} for case {case_id}")]
    Conflict {
        case_id: String,
        annotator: String,
        kind: TaskKind,
    },
    #[error("invalid submission: {0}")]
    Invalid(String),
}

impl ReviewError {
    fn parse(path: &Path, line: usize, reason: impl ToString) -> Self {
        ReviewError::Parse {
            path: path.display().to_string(),
            line,
            reason: reason.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Ranking,
    Verification,
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TaskKind::Ranking => "ranking",
            TaskKind::Verification => "verification",
        })
    }
}

impl std::str::FromStr for TaskKind {
    type Err = ReviewError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ranking" => Ok(TaskKind::Ranking),
            "verification" => Ok(TaskKind::Verification),
            _ => Err(ReviewError::Invalid(format!("unknown task kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Qualified,
    Unqualified,
}

/// A case as written in the cases file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseInput {
    pub case_id: String,
    pub lang: String,
    pub question: String,
    pub options: BTreeMap<String, String>,
    pub answers: Vec<String>,
    #[serde(default)]
    pub reference_rationale: Option<String>,
}

/// One model's output for a case, from the outputs file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOutput {
    pub case_id: String,
    pub model: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: String,
    pub text: String,
}

/// What an annotator sees. Model ids never leave the store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewCase {
    pub case_id: String,
    pub kind: TaskKind,
    pub lang: String,
    pub question: String,
    pub options: BTreeMap<String, String>,
    pub answers: Vec<String>,
    pub reference_rationale: Option<String>,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub case_id: String,
    pub annotator: String,
    pub kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub case_id: String,
    pub annotator: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum LogEvent {
    Assigned {
        annotator: String,
        kind: TaskKind,
        case_id: String,
    },
    Submitted(Submission),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum AssignmentPolicy {
    /// Every annotator may review every case.
    #[default]
    All,
    /// Case i (in serving order) goes to `per_case` consecutive annotators
    /// starting at i mod k. Unlisted annotators get nothing.
    RoundRobin { annotators: Vec<String>, per_case: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KindProgress {
    pub served: usize,
    pub submitted: usize,
    pub remaining: usize,
}

struct StoredCase {
    input: CaseInput,
    /// label → model id
    permutation: BTreeMap<String, String>,
    candidates: Vec<Candidate>,
}

fn label(i: usize) -> String {
    char::from(b'A' + i as u8).to_string()
}

pub struct ReviewStore {
    cases: BTreeMap<String, StoredCase>,
    order: Vec<String>,
    policy: AssignmentPolicy,
    served: BTreeMap<(String, TaskKind), Vec<String>>,
    served_set: HashSet<(String, TaskKind, String)>,
    submissions: Vec<Submission>,
    submitted: HashSet<(String, TaskKind, String)>,
    log: Option<File>,
    log_path: Option<PathBuf>,
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, ReviewError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| ReviewError::parse(path, i + 1, e))?);
    }
    Ok(out)
}

impl ReviewStore {
    /// Build an in-memory store. Candidate labels for each case come from a
    /// shuffle seeded by `seed` and the case id, so repeated loads and all
    /// annotators see the same anonymization.
    pub fn new(
        cases: Vec<CaseInput>,
        outputs: Vec<ModelOutput>,
        seed: u64,
        policy: AssignmentPolicy,
    ) -> Result<Self, ReviewError> {
        let mut by_case: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for c in &cases {
            if c.case_id.is_empty() {
                return Err(ReviewError::Input("empty case_id".into()));
            }
            if by_case.insert(c.case_id.clone(), BTreeMap::new()).is_some() {
                return Err(ReviewError::Input(format!("duplicate case {}", c.case_id)));
            }
        }
        for o in outputs {
            let models = by_case
                .get_mut(&o.case_id)
                .ok_or_else(|| ReviewError::Input(format!("output for unknown case {}", o.case_id)))?;
            if models.insert(o.model.clone(), o.text).is_some() {
                return Err(ReviewError::Input(format!(
                    "case {}: duplicate output for model {}",
                    o.case_id, o.model
                )));
            }
        }
        if let RoundRobin { annotators, per_case } = &policy {
            if annotators.is_empty() || *per_case == 0 || *per_case > annotators.len() {
                return Err(ReviewError::Input(
                    "round robin needs annotators and 1 ≤ per_case ≤ annotator count".into(),
                ));
            }
        }

        let mut stored = BTreeMap::new();
        for c in cases {
            let outputs = by_case.remove(&c.case_id).unwrap_or_default();
            if outputs.len() > 26 {
                return Err(ReviewError::Input(format!("case {}: more than 26 outputs", c.case_id)));
            }
            let mut models: Vec<(String, String)> = outputs.into_iter().collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stable_hash64(&[c.case_id.as_bytes()]));
            models.shuffle(&mut rng);
            let mut permutation = BTreeMap::new();
            let mut candidates = Vec::new();
            for (i, (model, text)) in models.into_iter().enumerate() {
                permutation.insert(label(i), model);
                candidates.push(Candidate { label: label(i), text });
            }
            stored.insert(
                c.case_id.clone(),
                StoredCase {
                    input: c,
                    permutation,
                    candidates,
                },
            );
        }

        let mut order: Vec<String> = stored.keys().cloned().collect();
        order.sort_by_key(|id| (stable_hash64(&[&seed.to_le_bytes(), id.as_bytes()]), id.clone()));

        Ok(Self {
            cases: stored,
            order,
            policy,
            served: BTreeMap::new(),
            served_set: HashSet::new(),
            submissions: Vec::new(),
            submitted: HashSet::new(),
            log: None,
            log_path: None,
        })
    }

    pub fn from_files(
        cases: &Path,
        outputs: &Path,
        seed: u64,
        policy: AssignmentPolicy,
    ) -> Result<Self, ReviewError> {
        Self::new(read_jsonl(cases)?, read_jsonl(outputs)?, seed, policy)
    }

    /// Replay an existing log, then append new events to it. A truncated
    /// final line (from a crash mid-write) is dropped.
    pub fn attach_log(&mut self, path: &Path) -> Result<(), ReviewError> {
        if path.exists() {
            let text = std::fs::read_to_string(path)?;
            let lines: Vec<&str> = text.lines().collect();
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let event: LogEvent = match serde_json::from_str(line) {
                    Ok(e) => e,
                    Err(e) if i + 1 == lines.len() && !text.ends_with('\n') => {
                        log::warn!("{}: dropping truncated last line: {e}", path.display());
                        break;
                    }
                    Err(e) => return Err(ReviewError::parse(path, i + 1, e)),
                };
                self.apply(event).map_err(|e| ReviewError::parse(path, i + 1, e))?;
            }
            if !text.is_empty() && !text.ends_with('\n') {
                // rewrite without the partial tail so appends start on a fresh line
                let keep = text.rfind('\n').map_or(0, |p| p + 1);
                std::fs::write(path, &text[..keep])?;
            }
        }
        self.log = Some(OpenOptions::new().create(true).append(true).open(path)?);
        self.log_path = Some(path.to_path_buf());
        Ok(())
    }

    pub fn log_path(&self) -> Option<&Path> {
        self.log_path.as_deref()
    }

    fn append(&mut self, event: &LogEvent) -> Result<(), ReviewError> {
        if let Some(f) = self.log.as_mut() {
            let mut line = serde_json::to_string(event).expect("event serializes");
            line.push('\n');
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        Ok(())
    }

    fn apply(&mut self, event: LogEvent) -> Result<(), ReviewError> {
        match event {
            LogEvent::Assigned {
                annotator,
                kind,
                case_id,
            } => {
                if !self.cases.contains_key(&case_id) {
                    return Err(ReviewError::UnknownCase(case_id));
                }
                self.mark_served(&annotator, kind, &case_id);
            }
            LogEvent::Submitted(sub) => {
                self.validate(&sub)?;
                self.record(sub);
            }
        }
        Ok(())
    }

    fn mark_served(&mut self, annotator: &str, kind: TaskKind, case_id: &str) {
        if self
            .served_set
            .insert((annotator.to_string(), kind, case_id.to_string()))
        {
            self.served
                .entry((annotator.to_string(), kind))
                .or_default()
                .push(case_id.to_string());
        }
    }

    fn record(&mut self, sub: Submission) {
        self.submitted
            .insert((sub.annotator.clone(), sub.kind, sub.case_id.clone()));
        self.submissions.push(sub);
    }

    fn eligible(&self, case: &StoredCase, kind: TaskKind) -> bool {
        match kind {
            TaskKind::Ranking => case.candidates.len() >= 2,
            TaskKind::Verification => case.input.reference_rationale.is_some(),
        }
    }

    /// Cases in serving order that `annotator` should review for `kind`.
    pub fn queue(&self, annotator: &str, kind: TaskKind) -> Vec<&str> {
        let eligible = self
            .order
            .iter()
            .filter(|id| self.eligible(&self.cases[*id], kind));
        match &self.policy {
            AssignmentPolicy::All => eligible.map(String::as_str).collect(),
            AssignmentPolicy::RoundRobin { annotators, per_case } => {
                let Some(pos) = annotators.iter().position(|a| a == annotator) else {
                    return Vec::new();
                };
                let k = annotators.len();
                eligible
                    .enumerate()
                    .filter(|(i, _)| (pos + k - i % k) % k < *per_case)
                    .map(|(_, id)| id.as_str())
                    .collect()
            }
        }
    }

    fn present(&self, case: &StoredCase, kind: TaskKind) -> ReviewCase {
        ReviewCase {
            case_id: case.input.case_id.clone(),
            kind,
            lang: case.input.lang.clone(),
            question: case.input.question.clone(),
            options: case.input.options.clone(),
            answers: case.input.answers.clone(),
            reference_rationale: case.input.reference_rationale.clone(),
            candidates: match kind {
                TaskKind::Ranking => case.candidates.clone(),
                TaskKind::Verification => Vec::new(),
            },
        }
    }

    /// Serve the next unseen case, or `None` once the queue is exhausted.
    pub fn next_task(&mut self, annotator: &str, kind: TaskKind) -> Result<Option<ReviewCase>, ReviewError> {
        if annotator.is_empty() {
            return Err(ReviewError::Invalid("empty annotator".into()));
        }
        let next = self
            .queue(annotator, kind)
            .into_iter()
            .find(|id| {
                !self
                    .served_set
                    .contains(&(annotator.to_string(), kind, id.to_string()))
            })
            .map(str::to_string);
        let Some(case_id) = next else {
            return Ok(None);
        };
        let event = LogEvent::Assigned {
            annotator: annotator.to_string(),
            kind,
            case_id: case_id.clone(),
        };
        self.append(&event)?;
        self.mark_served(annotator, kind, &case_id);
        Ok(Some(self.present(&self.cases[&case_id], kind)))
    }

    fn validate(&self, sub: &Submission) -> Result<(), ReviewError> {
        let case = self
            .cases
            .get(&sub.case_id)
            .ok_or_else(|| ReviewError::UnknownCase(sub.case_id.clone()))?;
        let key = (sub.annotator.clone(), sub.kind, sub.case_id.clone());
        if !self.served_set.contains(&key) {
            return Err(ReviewError::NotServed {
                case_id: sub.case_id.clone(),
                annotator: sub.annotator.clone(),
                kind: sub.kind,
            });
        }
        if self.submitted.contains(&key) {
            return Err(ReviewError::Conflict {
                case_id: sub.case_id.clone(),
                annotator: sub.annotator.clone(),
                kind: sub.kind,
            });
        }
        match sub.kind {
            TaskKind::Ranking => {
                if sub.verdict.is_some() {
                    return Err(ReviewError::Invalid("ranking submission carries a verdict".into()));
                }
                let ranking = sub
                    .ranking
                    .as_ref()
                    .ok_or_else(|| ReviewError::Invalid("ranking missing".into()))?;
                let given: BTreeSet<&String> = ranking.iter().collect();
                let expected: BTreeSet<&String> = case.permutation.keys().collect();
                if given.len() != ranking.len() || given != expected {
                    return Err(ReviewError::Invalid(format!(
                        "ranking must be a permutation of {:?}",
                        case.permutation.keys().collect::<Vec<_>>()
                    )));
                }
            }
            TaskKind::Verification => {
                if sub.ranking.is_some() {
                    return Err(ReviewError::Invalid("verification submission carries a ranking".into()));
                }
                if sub.verdict.is_none() {
                    return Err(ReviewError::Invalid("verdict missing".into()));
                }
            }
        }
        Ok(())
    }

    /// Validate against the served case and append to the log.
    pub fn submit(&mut self, sub: Submission) -> Result<(), ReviewError> {
        self.validate(&sub)?;
        self.append(&LogEvent::Submitted(sub.clone()))?;
        self.record(sub);
        Ok(())
    }

    pub fn submissions(&self) -> &[Submission] {
        &self.submissions
    }

    pub fn permutation(&self, case_id: &str) -> Option<&BTreeMap<String, String>> {
        self.cases.get(case_id).map(|c| &c.permutation)
    }

    pub fn case_ids(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(String::as_str)
    }

    pub fn case_lang(&self, case_id: &str) -> Option<&str> {
        self.cases.get(case_id).map(|c| c.input.lang.as_str())
    }

    fn sorted_submissions(&self, kind: TaskKind) -> Vec<&Submission> {
        let mut subs: Vec<&Submission> = self.submissions.iter().filter(|s| s.kind == kind).collect();
        subs.sort_by(|a, b| (&a.case_id, &a.annotator).cmp(&(&b.case_id, &b.annotator)));
        subs
    }

    /// Ranking submissions mapped back to model ids, sorted by
    /// (case_id, annotator).
    pub fn export_rankings(&self) -> Result<Vec<RankingRecord>, ReviewError> {
        self.sorted_submissions(TaskKind::Ranking)
            .into_iter()
            .map(|s| {
                let perm = self
                    .permutation(&s.case_id)
                    .ok_or_else(|| ReviewError::UnknownCase(s.case_id.clone()))?;
                let ordering = s
                    .ranking
                    .iter()
                    .flatten()
                    .map(|l| {
                        perm.get(l)
                            .cloned()
                            .ok_or_else(|| ReviewError::Invalid(format!("unknown label {l}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(RankingRecord {
                    case_id: s.case_id.clone(),
                    annotator: s.annotator.clone(),
                    mode: RankingMode::Human,
                    ordering,
                    ties: Vec::new(),
                })
            })
            .collect()
    }

    pub fn export_verifications(&self) -> Vec<VerificationRecord> {
        self.sorted_submissions(TaskKind::Verification)
            .into_iter()
            .filter_map(|s| {
                s.verdict.map(|verdict| VerificationRecord {
                    case_id: s.case_id.clone(),
                    annotator: s.annotator.clone(),
                    verdict,
                    timestamp: s.timestamp.clone(),
                })
            })
            .collect()
    }

    /// Counts for every annotator that has been served something, plus
    /// every round-robin annotator.
    pub fn progress(&self) -> BTreeMap<String, BTreeMap<TaskKind, KindProgress>> {
        let mut annotators: BTreeSet<String> = self.served.keys().map(|(a, _)| a.clone()).collect();
        if let AssignmentPolicy::RoundRobin { annotators: list, .. } = &self.policy {
            annotators.extend(list.iter().cloned());
        }
        let mut out = BTreeMap::new();
        for a in annotators {
            let mut per_kind = BTreeMap::new();
            for kind in [TaskKind::Ranking, TaskKind::Verification] {
                let queue = self.queue(&a, kind);
                let served = self.served.get(&(a.clone(), kind)).map_or(0, Vec::len);
                let submitted = self
                    .submitted
                    .iter()
                    .filter(|(sa, sk, _)| *sa == a && *sk == kind)
                    .count();
                let remaining = queue
                    .iter()
                    .filter(|id| !self.served_set.contains(&(a.clone(), kind, id.to_string())))
                    .count();
                per_kind.insert(
                    kind,
                    KindProgress {
                        served,
                        submitted,
                        remaining,
                    },
                );
            }
            out.insert(a, per_kind);
        }
        out
    }
}

use AssignmentPolicy::RoundRobin;
