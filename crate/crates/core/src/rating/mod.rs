//! Rankings to scores, per-model aggregation, and rank correlation between
//! automatic metrics and human ratings.

mod kendall;

pub use kendall::kendall_tau;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Language used when a case has no entry in the language map.
pub const UNKNOWN_LANG: &str = "und";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatingError {
    #[error("case {case_id}: model {model} appears more than once")]
    Duplicate { case_id: String, model: String },
    #[error("case {case_id}: ordering has {found} models, expected {expected}")]
    WrongLength {
        case_id: String,
        expected: usize,
        found: usize,
    },
    #[error("case {case_id}: no score for model {model}")]
    MissingScore { case_id: String, model: String },
    #[error("case {case_id}: model {model} is not in the model set")]
    UnknownModel { case_id: String, model: String },
    #[error("case {case_id}: model set differs from earlier records")]
    ModelSetMismatch { case_id: String },
    #[error("case {case_id}: more than one record from {annotator}")]
    DuplicateRecord { case_id: String, annotator: String },
    #[error("score is not finite")]
    NonFinite,
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("all values tied; correlation undefined")]
    AllTied,
    #[error("coverage mismatch, {} point(s) missing: {}", missing.len(), missing.join(", "))]
    Coverage { missing: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingMode {
    Human,
    JudgeModel,
    Metric,
}

/// One annotator's ordering of model outputs for a case, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingRecord {
    pub case_id: String,
    pub annotator: String,
    pub mode: RankingMode,
    pub ordering: Vec<String>,
    /// Groups of models whose metric scores tied; their relative order came
    /// from model id order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ties: Vec<Vec<String>>,
}

impl RankingRecord {
    pub fn new(case_id: &str, annotator: &str, mode: RankingMode, ordering: &[&str]) -> Self {
        Self {
            case_id: case_id.to_string(),
            annotator: annotator.to_string(),
            mode,
            ordering: ordering.iter().map(|s| s.to_string()).collect(),
            ties: Vec::new(),
        }
    }
}

/// Position p (1-based) of `m` models gets m − p + 1.
pub fn ranks_to_scores(record: &RankingRecord, m: usize) -> Result<BTreeMap<String, u32>, RatingError> {
    if record.ordering.len() != m {
        return Err(RatingError::WrongLength {
            case_id: record.case_id.clone(),
            expected: m,
            found: record.ordering.len(),
        });
    }
    let mut scores = BTreeMap::new();
    for (pos, model) in record.ordering.iter().enumerate() {
        if scores.insert(model.clone(), (m - pos) as u32).is_some() {
            return Err(RatingError::Duplicate {
                case_id: record.case_id.clone(),
                model: model.clone(),
            });
        }
    }
    Ok(scores)
}

/// Rank models by a metric, highest first. Equal scores keep model id order
/// and are listed in `ties`.
pub fn metric_ranking(
    case_id: &str,
    metric: &str,
    scores: &BTreeMap<String, f64>,
    models: &BTreeSet<String>,
) -> Result<RankingRecord, RatingError> {
    for model in models {
        if !scores.contains_key(model) {
            return Err(RatingError::MissingScore {
                case_id: case_id.to_string(),
                model: model.clone(),
            });
        }
    }
    let mut ranked: Vec<(&String, f64)> = Vec::with_capacity(models.len());
    for (model, &s) in scores {
        if !models.contains(model) {
            return Err(RatingError::UnknownModel {
                case_id: case_id.to_string(),
                model: model.clone(),
            });
        }
        if !s.is_finite() {
            return Err(RatingError::NonFinite);
        }
        ranked.push((model, s));
    }
    // BTreeMap iteration is id order; the sort is stable.
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));

    let mut ties = Vec::new();
    let mut start = 0;
    for i in 1..=ranked.len() {
        if i == ranked.len() || ranked[i].1 != ranked[start].1 {
            if i - start > 1 {
                ties.push(ranked[start..i].iter().map(|(m, _)| (*m).clone()).collect());
            }
            start = i;
        }
    }
    Ok(RankingRecord {
        case_id: case_id.to_string(),
        annotator: metric.to_string(),
        mode: RankingMode::Metric,
        ordering: ranked.into_iter().map(|(m, _)| m.clone()).collect(),
        ties,
    })
}

/// Scores from one ranking record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseScores {
    pub case_id: String,
    pub annotator: String,
    pub lang: String,
    pub scores: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Sum {
    total: u64,
    count: u64,
}

impl Sum {
    fn add(&mut self, v: u32) {
        self.total += u64::from(v);
        self.count += 1;
    }

    fn mean(&self) -> f64 {
        self.total as f64 / self.count as f64
    }
}

/// Per-record scores plus mean score per (model, language) and per model.
/// Sums are kept as integers, so results do not depend on record order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScoreMatrix {
    models: BTreeSet<String>,
    cases: Vec<CaseScores>,
    by_lang: BTreeMap<(String, String), Sum>,
    overall: BTreeMap<String, Sum>,
}

impl ScoreMatrix {
    pub fn models(&self) -> &BTreeSet<String> {
        &self.models
    }

    /// Per-record scores, sorted by (case_id, annotator).
    pub fn cases(&self) -> &[CaseScores] {
        &self.cases
    }

    pub fn langs(&self) -> BTreeSet<&str> {
        self.by_lang.keys().map(|(l, _)| l.as_str()).collect()
    }

    pub fn mean(&self, model: &str, lang: &str) -> Option<f64> {
        self.by_lang
            .get(&(lang.to_string(), model.to_string()))
            .map(Sum::mean)
    }

    pub fn overall_mean(&self, model: &str) -> Option<f64> {
        self.overall.get(model).map(Sum::mean)
    }

    /// Number of distinct cases per language.
    pub fn case_counts(&self) -> BTreeMap<String, usize> {
        let mut seen: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
        for c in &self.cases {
            seen.entry(c.lang.clone()).or_default().insert(&c.case_id);
        }
        seen.into_iter().map(|(l, s)| (l, s.len())).collect()
    }

    /// Mean score per (case, model) across annotators.
    pub fn case_means(&self) -> BTreeMap<(String, String), f64> {
        let mut sums: BTreeMap<(String, String), Sum> = BTreeMap::new();
        for c in &self.cases {
            for (model, &s) in &c.scores {
                sums.entry((c.case_id.clone(), model.clone())).or_default().add(s);
            }
        }
        sums.into_iter().map(|(k, s)| (k, s.mean())).collect()
    }

    pub fn case_lang(&self, case_id: &str) -> Option<&str> {
        self.cases
            .iter()
            .find(|c| c.case_id == case_id)
            .map(|c| c.lang.as_str())
    }

    pub fn to_report(&self) -> Value {
        let mut per_lang: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
        for ((lang, model), s) in &self.by_lang {
            per_lang.entry(lang).or_default().insert(model, s.mean());
        }
        let overall: BTreeMap<&str, f64> =
            self.overall.iter().map(|(m, s)| (m.as_str(), s.mean())).collect();
        json!({
            "models": self.models,
            "records": self.cases.len(),
            "case_counts": self.case_counts(),
            "per_language": per_lang,
            "overall": overall,
        })
    }
}

/// Aggregate rankings into a score matrix. `languages` maps case id to
/// language; unmapped cases go under `und`. All records must rank the same
/// model set, and each (case, annotator) may appear once.
pub fn aggregate_ratings(
    records: &[RankingRecord],
    languages: &BTreeMap<String, String>,
) -> Result<ScoreMatrix, RatingError> {
    let mut matrix = ScoreMatrix::default();
    let mut seen = BTreeSet::new();
    for r in records {
        let scores = ranks_to_scores(r, r.ordering.len())?;
        let models: BTreeSet<String> = scores.keys().cloned().collect();
        if matrix.models.is_empty() {
            matrix.models = models;
        } else if matrix.models != models {
            return Err(RatingError::ModelSetMismatch {
                case_id: r.case_id.clone(),
            });
        }
        if !seen.insert((r.case_id.clone(), r.annotator.clone())) {
            return Err(RatingError::DuplicateRecord {
                case_id: r.case_id.clone(),
                annotator: r.annotator.clone(),
            });
        }
        let lang = languages
            .get(&r.case_id)
            .cloned()
            .unwrap_or_else(|| UNKNOWN_LANG.to_string());
        for (model, &s) in &scores {
            matrix
                .by_lang
                .entry((lang.clone(), model.clone()))
                .or_default()
                .add(s);
            matrix.overall.entry(model.clone()).or_default().add(s);
        }
        matrix.cases.push(CaseScores {
            case_id: r.case_id.clone(),
            annotator: r.annotator.clone(),
            lang,
            scores,
        });
    }
    matrix
        .cases
        .sort_by(|a, b| (&a.case_id, &a.annotator).cmp(&(&b.case_id, &b.annotator)));
    Ok(matrix)
}

/// Metric scores keyed by (case_id, model).
pub type PointScores = BTreeMap<(String, String), f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub metric: String,
    /// `None` when every point tied on one side.
    pub tau: Option<f64>,
    pub n_points: usize,
    pub per_language: BTreeMap<String, LangCorrelation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangCorrelation {
    pub tau: Option<f64>,
    pub n_points: usize,
}

fn tau_or_none(a: &[f64], b: &[f64]) -> Result<Option<f64>, RatingError> {
    match kendall_tau(a, b) {
        Ok(t) => Ok(Some(t)),
        Err(RatingError::AllTied) | Err(RatingError::TooFewPoints(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Kendall τ-b between each metric and the human case means, pooled over all
/// (case, model) points and per language. Sorted by τ descending; undefined
/// τ sorts last.
pub fn correlate_metrics(
    machine: &BTreeMap<String, PointScores>,
    human: &ScoreMatrix,
) -> Result<Vec<Correlation>, RatingError> {
    let human_points = human.case_means();
    let mut case_lang: BTreeMap<&str, &str> = BTreeMap::new();
    for c in human.cases() {
        case_lang.insert(&c.case_id, &c.lang);
    }

    let mut missing = Vec::new();
    for (metric, points) in machine {
        for key in human_points.keys() {
            if !points.contains_key(key) {
                missing.push(format!("{metric}: {}/{} has no metric score", key.0, key.1));
            }
        }
        for key in points.keys() {
            if !human_points.contains_key(key) {
                missing.push(format!("{metric}: {}/{} has no human score", key.0, key.1));
            }
        }
    }
    if !missing.is_empty() {
        return Err(RatingError::Coverage { missing });
    }

    let mut out = Vec::with_capacity(machine.len());
    for (metric, points) in machine {
        let mut pooled = (Vec::new(), Vec::new());
        let mut by_lang: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for (key, &h) in &human_points {
            let m = points[key];
            pooled.0.push(m);
            pooled.1.push(h);
            let lang = case_lang.get(key.0.as_str()).copied().unwrap_or(UNKNOWN_LANG);
            let e = by_lang.entry(lang).or_default();
            e.0.push(m);
            e.1.push(h);
        }
        let mut per_language = BTreeMap::new();
        for (lang, (m, h)) in by_lang {
            per_language.insert(
                lang.to_string(),
                LangCorrelation {
                    tau: tau_or_none(&m, &h)?,
                    n_points: m.len(),
                },
            );
        }
        out.push(Correlation {
            metric: metric.clone(),
            tau: tau_or_none(&pooled.0, &pooled.1)?,
            n_points: pooled.0.len(),
            per_language,
        });
    }
    out.sort_by(|a, b| match (a.tau, b.tau) {
        (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.metric.cmp(&b.metric)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.metric.cmp(&b.metric),
    });
    Ok(out)
}

/// `{metric: {"tau", "n_points"[, "per_language"]}}`.
pub fn correlation_report(rows: &[Correlation], per_language: bool) -> Value {
    let mut map = serde_json::Map::new();
    for r in rows {
        let mut entry = json!({ "tau": r.tau, "n_points": r.n_points });
        if per_language {
            entry["per_language"] = json!(r.per_language);
        }
        map.insert(r.metric.clone(), entry);
    }
    Value::Object(map)
}
