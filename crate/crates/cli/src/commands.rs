//! Subcommand implementations.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use medcorpus_core::llm::{
    classify_topic, generate_rationale, language_name, map_bounded, FileClient, LlmClient, LlmOptions,
};
use medcorpus_core::metrics::{
    bleu_n_with, bleu_with, compute_idf, embed_score, parse_answer, rouge_l, rouge_n, IdfTable, Orientation,
    Smoothing, TokenEmbeddings, TokenizedPair,
};
use medcorpus_core::ocr::{exclude_pages, group_by_page, page_text, PageExclusions};
use medcorpus_core::prompts::{build_prompt, PromptKind, JUDGE_LABELS, SUBJECTS_KEY};
use medcorpus_core::qa::{dataset_stats, split_dataset, QAItem, SplitSpec, TopicList};
use medcorpus_core::rating::{
    aggregate_ratings, correlate_metrics, correlation_report, ranks_to_scores, PointScores, RankingMode,
    RankingRecord,
};
use medcorpus_core::review::{AssignmentPolicy, ReviewStore, TaskKind};
use medcorpus_core::sample::sample_for_review;
use medcorpus_core::tokenize::{tokenizer_by_name, Tokenizer};
use medcorpus_core::util::stable_hash64;
use medcorpus_core::{chunk_document, filter_stream, load_lexicon_dir, CorpusFilter, CorpusRecord, FilterConfig, StreamOptions};

use crate::http_llm::HttpClient;
use crate::io::{create, output, read_jsonl, write_json, write_jsonl};
use crate::{server, usage, Cli, Command};

pub fn dispatch(cli: &Cli) -> Result<()> {
    if cli.threads > 0 {
        // Fails only when a pool already exists, e.g. in-process tests.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            log::debug!("thread pool already configured: {e}");
        }
    }
    match &cli.command {
        Command::Filter(a) => filter(cli, a),
        Command::Chunk(a) => chunk(a),
        Command::Sample(a) => sample(cli, a),
        Command::Stats(a) => stats(a),
        Command::OcrOrder(a) => ocr_order(a),
        Command::Split(a) => split(cli, a),
        Command::Prompts(a) => prompts(cli, a),
        Command::Score(a) => score(a),
        Command::Correlate(a) => correlate(a),
        Command::Topics(a) => topics(a),
        Command::Rationales(a) => rationales(a),
        Command::ReviewServe(a) => review_serve(cli, a),
        Command::ReviewExport(a) => review_export(cli, a),
    }
}

fn load_config(cli: &Cli) -> Result<FilterConfig> {
    match &cli.config {
        Some(p) => FilterConfig::load(p).with_context(|| format!("config {}", p.display())),
        None => Ok(FilterConfig::shipped()),
    }
}

fn tokenizer(name: &str) -> Result<Box<dyn Tokenizer>> {
    tokenizer_by_name(name).map_err(|e| match e {
        medcorpus_core::tokenize::TokenizerError::Unknown(_) => usage(e.to_string()),
        other => other.into(),
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    ))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn filter(cli: &Cli, a: &crate::FilterArgs) -> Result<()> {
    let config = load_config(cli)?;
    let lexicons = load_lexicon_dir(&a.lexicons, config.langs())?;
    let tok: Arc<dyn Tokenizer> = Arc::from(tokenizer(&a.tokenizer)?);
    let filter = CorpusFilter::new(lexicons, &config, tok)?;
    let rejects_path = a.rejects.clone().unwrap_or_else(|| with_suffix(&a.out, ".rejects.jsonl"));
    let mut out = create(&a.out)?;
    let mut rejects = create(&rejects_path)?;
    let opts = StreamOptions {
        ordered: a.ordered,
        kept_only: a.kept_only,
        ..StreamOptions::default()
    };
    let stats = filter_stream(&filter, open(&a.input)?, &mut out, &mut rejects, opts)?;
    out.flush()?;
    rejects.flush()?;
    if stats.rejected > 0 {
        log::warn!("{} records rejected, see {}", stats.rejected, rejects_path.display());
    }
    write_json(a.stats.as_deref(), &stats.to_report())
}

#[derive(Deserialize)]
struct ChunkInput {
    id: String,
    text: String,
    #[serde(default)]
    keep: Option<bool>,
}

fn chunk(a: &crate::ChunkArgs) -> Result<()> {
    if a.size <= a.overlap {
        return Err(usage(format!("--size {} must exceed --overlap {}", a.size, a.overlap)));
    }
    let tok = tokenizer(&a.tokenizer)?;
    let mut out = create(&a.out)?;
    let mut lines = open(&a.input)?.lines().enumerate();
    let (mut docs, mut chunks) = (0usize, 0usize);
    loop {
        let mut batch = Vec::with_capacity(1024);
        for (i, line) in lines.by_ref() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            batch.push((i + 1, line));
            if batch.len() == 1024 {
                break;
            }
        }
        if batch.is_empty() {
            break;
        }
        let done: Vec<Result<Vec<medcorpus_core::TextChunk>>> = batch
            .par_iter()
            .map(|(n, line)| {
                let doc: ChunkInput =
                    serde_json::from_str(line).with_context(|| format!("{}:{n}", a.input.display()))?;
                if doc.keep == Some(false) {
                    return Ok(Vec::new());
                }
                let tokens = tok.tokenize(&doc.text);
                Ok(chunk_document(&doc.id, &tokens, a.size, a.overlap)?)
            })
            .collect();
        for d in done {
            let d = d?;
            docs += usize::from(!d.is_empty());
            chunks += d.len();
            write_jsonl(&mut out, d)?;
        }
    }
    out.flush()?;
    log::info!("{docs} documents, {chunks} chunks");
    Ok(())
}

fn sample(cli: &Cli, a: &crate::SampleArgs) -> Result<()> {
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let rows: Vec<serde_json::Value> = read_jsonl(&a.input)?;
    let mut kept = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        if row.get("keep").and_then(|k| k.as_bool()) == Some(false) {
            continue;
        }
        let rec: CorpusRecord =
            serde_json::from_value(row).with_context(|| format!("{}: record {}", a.input.display(), i + 1))?;
        kept.push(rec);
    }
    let sampled = sample_for_review(kept, a.n, cli.seed);
    let mut w = output(a.out.as_deref())?;
    for (lang, recs) in &sampled {
        log::info!("{lang}: {} sampled", recs.len());
        write_jsonl(&mut w, recs)?;
    }
    w.flush()?;
    Ok(())
}

fn read_qa(path: &Path) -> Result<Vec<QAItem>> {
    let items: Vec<QAItem> = read_jsonl(path)?;
    for it in &items {
        it.validate().with_context(|| format!("{}: item {}", path.display(), it.id))?;
    }
    Ok(items)
}

fn stats(a: &crate::StatsArgs) -> Result<()> {
    let tok = tokenizer(&a.tokenizer)?;
    let items = read_qa(&a.input)?;
    write_json(a.out.as_deref(), &dataset_stats(&items, tok.as_ref()))
}

fn ocr_order(a: &crate::OcrArgs) -> Result<()> {
    if !(a.row_overlap > 0.0 && a.row_overlap <= 1.0) {
        return Err(usage("--row-overlap must be in (0, 1]"));
    }
    let exclusions: PageExclusions = match &a.exclude {
        Some(s) => s.parse().map_err(|e: medcorpus_core::ocr::OcrError| usage(e.to_string()))?,
        None => PageExclusions::default(),
    };
    let pages = exclude_pages(group_by_page(read_jsonl(&a.input)?)?, &exclusions);
    let mut w = create(&a.out)?;
    for (page, boxes) in &pages {
        let text = page_text(boxes, a.row_overlap)?;
        write_jsonl(&mut w, [json!({ "page": page, "text": text })])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_ratios(s: &str) -> Result<(u32, u32, u32)> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || usage(format!("ratios must look like 8:1:1, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let n: Vec<u32> = parts
        .iter()
        .map(|p| p.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    if n.contains(&0) {
        return Err(bad());
    }
    Ok((n[0], n[1], n[2]))
}

fn split(cli: &Cli, a: &crate::SplitArgs) -> Result<()> {
    let spec = SplitSpec {
        ratios: parse_ratios(&a.ratios)?,
        seed: cli.seed,
    };
    let items = read_qa(&a.input)?;
    let s = split_dataset(&items, &spec)?;
    let dir = a
        .out_dir
        .clone()
        .or_else(|| a.input.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    for (name, part) in [("train", &s.train), ("val", &s.val), ("test", &s.test)] {
        let mut w = create(&dir.join(format!("{name}.jsonl")))?;
        write_jsonl(&mut w, part.iter())?;
        w.flush()?;
    }
    write_json(
        None,
        &json!({ "train": s.train.len(), "val": s.val.len(), "test": s.test.len(), "seed": cli.seed }),
    )
}

#[derive(Debug, Clone, Deserialize)]
struct OutputRec {
    case_id: String,
    model: String,
    text: String,
}

fn load_topics(path: Option<&Path>) -> Result<TopicList> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            Ok(TopicList::from_lines(&text)?)
        }
        None => Ok(TopicList::default()),
    }
}

/// Models of one case in a seeded order, labelled Model A..F.
fn judge_labels(seed: u64, case_id: &str, outputs: &[OutputRec]) -> Vec<(String, OutputRec)> {
    let mut v = outputs.to_vec();
    v.sort_by_key(|o| (stable_hash64(&[&seed.to_le_bytes(), case_id.as_bytes(), o.model.as_bytes()]), o.model.clone()));
    JUDGE_LABELS.iter().map(|l| l.to_string()).zip(v).collect()
}

fn prompts(cli: &Cli, a: &crate::PromptArgs) -> Result<()> {
    let kind: PromptKind = a.kind.parse().map_err(|e: medcorpus_core::prompts::PromptError| usage(e.to_string()))?;
    let items = read_qa(&a.input)?;
    let mut base = BTreeMap::new();
    if kind == PromptKind::TopicClassify {
        base.insert(SUBJECTS_KEY.to_string(), load_topics(a.topics.as_deref())?.subjects_string());
    }
    let mut by_case: BTreeMap<String, Vec<OutputRec>> = BTreeMap::new();
    if kind == PromptKind::JudgeRanking {
        let path = a.outputs.as_ref().ok_or_else(|| usage("judge_ranking needs --outputs"))?;
        for o in read_jsonl::<OutputRec>(path)? {
            by_case.entry(o.case_id.clone()).or_default().push(o);
        }
    }
    let mut w = output(a.out.as_deref())?;
    for item in &items {
        let lang = a.lang.clone().unwrap_or_else(|| language_name(&item.lang).to_string());
        let mut extras = base.clone();
        let mut labels = BTreeMap::new();
        if kind == PromptKind::JudgeRanking {
            let outs = by_case.get(&item.id).map(Vec::as_slice).unwrap_or_default();
            if outs.len() != JUDGE_LABELS.len() {
                bail!("item {}: judge ranking needs {} model outputs, found {}", item.id, JUDGE_LABELS.len(), outs.len());
            }
            for (label, o) in judge_labels(cli.seed, &item.id, outs) {
                extras.insert(label.clone(), o.text);
                labels.insert(label, o.model);
            }
        }
        let prompt = build_prompt(kind, &lang, item, &extras)?;
        let mut row = json!({ "id": item.id, "kind": kind, "prompt": prompt });
        if !labels.is_empty() {
            row["labels"] = json!(labels);
        }
        write_jsonl(&mut w, [row])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct CandRec {
    #[serde(alias = "case_id")]
    id: String,
    #[serde(default)]
    model: Option<String>,
    #[serde(default)]
    lang: Option<String>,
    text: String,
}

#[derive(Debug, Deserialize)]
struct RefRec {
    #[serde(alias = "case_id")]
    id: String,
    #[serde(default)]
    lang: Option<String>,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    answers: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct EmbRec {
    #[serde(alias = "case_id")]
    id: String,
    #[serde(default)]
    model: Option<String>,
    tokens: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
struct TextRec {
    text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Metric {
    Bleu(usize),
    BleuAll,
    Rouge(usize),
    RougeL,
    Embed,
    EmbedF1,
    Accuracy,
}

impl Metric {
    const NAMES: &'static str = "bleu1..bleu4, bleu, rouge1, rouge2, rougeL, embed, embed_f1, accuracy";

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "bleu" => Metric::BleuAll,
            "rougeL" | "rouge_l" | "rougel" => Metric::RougeL,
            "rouge1" => Metric::Rouge(1),
            "rouge2" => Metric::Rouge(2),
            "embed" => Metric::Embed,
            "embed_f1" => Metric::EmbedF1,
            "accuracy" => Metric::Accuracy,
            _ => {
                let n: usize = s.strip_prefix("bleu")?.parse().ok()?;
                if !(1..=4).contains(&n) {
                    return None;
                }
                Metric::Bleu(n)
            }
        })
    }

    fn needs_text(self) -> bool {
        !matches!(self, Metric::Accuracy | Metric::Embed | Metric::EmbedF1)
    }

    fn needs_embeddings(self) -> bool {
        matches!(self, Metric::Embed | Metric::EmbedF1)
    }
}

#[derive(Debug, Serialize)]
struct PointRow<'a> {
    case_id: &'a str,
    model: &'a str,
    lang: &'a str,
    metric: &'a str,
    score: f64,
}

const DEFAULT_MODEL: &str = "candidate";

/// (case id, model, lang, one value per requested metric)
type ScoredPair = (String, String, String, Vec<f64>);

/// Running (sum, count) per (case, model).
type RankSums = BTreeMap<(String, String), (f64, usize)>;

fn score(a: &crate::ScoreArgs) -> Result<()> {
    let mut metrics: Vec<(String, Metric)> = Vec::new();
    for name in a.metrics.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m = Metric::parse(name).ok_or_else(|| usage(format!("unknown metric {name:?}; expected {}", Metric::NAMES)))?;
        if !metrics.iter().any(|(n, _)| n == name) {
            metrics.push((name.to_string(), m));
        }
    }
    if metrics.is_empty() {
        return Err(usage("--metrics is empty"));
    }
    let want_embed = metrics.iter().any(|(_, m)| m.needs_embeddings());
    if want_embed && (a.embeddings.is_none() || a.ref_embeddings.is_none()) {
        return Err(usage("embed metrics need --embeddings and --ref-embeddings"));
    }
    let smoothing = match a.smoothing {
        crate::SmoothingArg::None => Smoothing::None,
        crate::SmoothingArg::AddEpsilon => Smoothing::AddEpsilon(1e-9),
    };
    let orientation = match a.orientation {
        crate::OrientationArg::Candidate => Orientation::CandidateRecall,
        crate::OrientationArg::Reference => Orientation::ReferenceRecall,
    };
    let tok = tokenizer(&a.tokenizer)?;
    let cands: Vec<CandRec> = read_jsonl(&a.cand)?;
    let mut refs: BTreeMap<String, RefRec> = BTreeMap::new();
    for r in read_jsonl::<RefRec>(&a.reference)? {
        let id = r.id.clone();
        if refs.insert(id.clone(), r).is_some() {
            bail!("duplicate reference id {id:?}");
        }
    }

    let mut cand_emb: BTreeMap<(String, Option<String>), TokenEmbeddings> = BTreeMap::new();
    let mut ref_emb: BTreeMap<String, TokenEmbeddings> = BTreeMap::new();
    let mut idf = IdfTable::uniform();
    if want_embed {
        for e in read_jsonl::<EmbRec>(a.embeddings.as_deref().expect("checked"))? {
            cand_emb.insert((e.id, e.model), TokenEmbeddings::new(e.tokens, e.vectors)?);
        }
        for e in read_jsonl::<EmbRec>(a.ref_embeddings.as_deref().expect("checked"))? {
            ref_emb.insert(e.id, TokenEmbeddings::new(e.tokens, e.vectors)?);
        }
        idf = match &a.idf_corpus {
            Some(p) => {
                let docs: Vec<Vec<String>> =
                    read_jsonl::<TextRec>(p)?.iter().map(|d| tok.tokenize(&d.text)).collect();
                compute_idf(&docs)?
            }
            None => {
                let docs: Vec<&[String]> = ref_emb.values().map(|e| e.tokens.as_slice()).collect();
                compute_idf(&docs)?
            }
        };
    }

    let needs_text = metrics.iter().any(|(_, m)| m.needs_text());
    let rows: Vec<Result<ScoredPair>> = cands
        .par_iter()
        .map(|c| {
            let model = c.model.clone().unwrap_or_else(|| DEFAULT_MODEL.into());
            let r = refs.get(&c.id).with_context(|| format!("candidate {:?} has no reference", c.id))?;
            let lang = c.lang.clone().or_else(|| r.lang.clone()).unwrap_or_else(|| "und".into());
            let pair = if needs_text {
                let rt = r.text.as_deref().with_context(|| format!("reference {:?} has no text", r.id))?;
                Some(TokenizedPair::new(&tok.tokenize(&c.text), &tok.tokenize(rt), &lang))
            } else {
                None
            };
            let embed = if want_embed {
                let ce = cand_emb
                    .get(&(c.id.clone(), c.model.clone()))
                    .with_context(|| format!("no embeddings for candidate {}/{model}", c.id))?;
                let re = ref_emb.get(&c.id).with_context(|| format!("no embeddings for reference {}", c.id))?;
                Some(embed_score(ce, re, &idf, orientation)?)
            } else {
                None
            };
            let mut vals = Vec::with_capacity(metrics.len());
            for (_, m) in &metrics {
                let v = match *m {
                    Metric::Bleu(n) => bleu_n_with(pair.as_ref().expect("text"), n, smoothing)?,
                    Metric::BleuAll => bleu_with(pair.as_ref().expect("text"), smoothing),
                    Metric::Rouge(n) => rouge_n(pair.as_ref().expect("text"), n)?.f1,
                    Metric::RougeL => rouge_l(pair.as_ref().expect("text")).f1,
                    Metric::Embed => embed.expect("embed").recall,
                    Metric::EmbedF1 => embed.expect("embed").f1,
                    Metric::Accuracy => {
                        let gold: BTreeSet<char> = r
                            .answers
                            .as_ref()
                            .with_context(|| format!("reference {:?} has no answers", r.id))?
                            .iter()
                            .filter_map(|s| s.trim().chars().next())
                            .map(|ch| ch.to_ascii_uppercase())
                            .collect();
                        f64::from(u8::from(!gold.is_empty() && parse_answer(&c.text) == gold))
                    }
                };
                vals.push(v);
            }
            Ok((c.id.clone(), model, lang, vals))
        })
        .collect();

    let mut seen = BTreeSet::new();
    let mut sums: BTreeMap<&str, BTreeMap<String, (f64, usize)>> = BTreeMap::new();
    let mut points = match &a.point_scores {
        Some(p) => Some(create(p)?),
        None => None,
    };
    for row in rows {
        let (id, model, lang, vals) = row?;
        if !seen.insert((id.clone(), model.clone())) {
            bail!("duplicate candidate {id}/{model}");
        }
        for ((name, _), v) in metrics.iter().zip(vals) {
            let e = sums.entry(name).or_default().entry(lang.clone()).or_default();
            e.0 += v;
            e.1 += 1;
            if let Some(w) = points.as_mut() {
                let row = PointRow { case_id: &id, model: &model, lang: &lang, metric: name, score: v };
                write_jsonl(w, [row])?;
            }
        }
    }
    if let Some(mut w) = points {
        w.flush()?;
    }
    let mut report = serde_json::Map::new();
    for (name, per_lang) in sums {
        let (s, n) = per_lang.values().fold((0.0, 0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
        let langs: BTreeMap<&String, f64> = per_lang.iter().map(|(l, v)| (l, v.0 / v.1 as f64)).collect();
        report.insert(name.to_string(), json!({ "mean": s / n as f64, "n": n, "per_language": langs }));
    }
    write_json(a.out.as_deref(), &report)
}

#[derive(Debug, Deserialize)]
struct MetricPoint {
    case_id: String,
    model: String,
    #[serde(default)]
    lang: Option<String>,
    metric: String,
    score: f64,
}

#[derive(Debug, Deserialize)]
struct CaseLang {
    #[serde(alias = "id")]
    case_id: String,
    lang: String,
}

fn correlate(a: &crate::CorrelateArgs) -> Result<()> {
    let records: Vec<RankingRecord> = read_jsonl(&a.rankings)?;
    let (human, other): (Vec<_>, Vec<_>) = records.into_iter().partition(|r| r.mode == RankingMode::Human);
    if human.is_empty() {
        bail!("{} has no human rankings", a.rankings.display());
    }
    let mut langs: BTreeMap<String, String> = BTreeMap::new();
    let mut machine: BTreeMap<String, PointScores> = BTreeMap::new();
    if let Some(p) = &a.metric_scores {
        for pt in read_jsonl::<MetricPoint>(p)? {
            if !pt.score.is_finite() {
                bail!("{}: non-finite score for {}/{}", pt.metric, pt.case_id, pt.model);
            }
            if let Some(l) = pt.lang {
                langs.entry(pt.case_id.clone()).or_insert(l);
            }
            let key = (pt.case_id.clone(), pt.model.clone());
            if machine.entry(pt.metric.clone()).or_default().insert(key, pt.score).is_some() {
                bail!("{}: duplicate score for {}/{}", pt.metric, pt.case_id, pt.model);
            }
        }
    }
    // judge and metric rankings: mean rank score per (case, model) and annotator
    let mut ranked: BTreeMap<String, RankSums> = BTreeMap::new();
    for r in &other {
        for (model, s) in ranks_to_scores(r, r.ordering.len())? {
            let e = ranked.entry(r.annotator.clone()).or_default().entry((r.case_id.clone(), model)).or_default();
            e.0 += f64::from(s);
            e.1 += 1;
        }
    }
    for (name, pts) in ranked {
        if machine.contains_key(&name) {
            bail!("metric {name:?} appears both as scores and as rankings");
        }
        machine.insert(name, pts.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect());
    }
    if machine.is_empty() {
        return Err(usage("nothing to correlate: give --metric-scores or non-human rankings"));
    }
    if let Some(p) = &a.cases {
        for c in read_jsonl::<CaseLang>(p)? {
            langs.insert(c.case_id, c.lang);
        }
    }
    let matrix = aggregate_ratings(&human, &langs)?;
    if let Some(p) = &a.scores {
        write_json(Some(p), &matrix.to_report())?;
    }
    let rows = correlate_metrics(&machine, &matrix)?;
    write_json(a.out.as_deref(), &correlation_report(&rows, a.per_language))
}

fn llm_client(a: &crate::LlmArgs) -> Result<Box<dyn LlmClient>> {
    match (&a.stub, &a.endpoint) {
        (Some(p), _) => Ok(Box::new(FileClient::from_file(p)?)),
        (None, Some(url)) => {
            let token = std::env::var(crate::http_llm::TOKEN_ENV).ok();
            Ok(Box::new(HttpClient::new(url, token, a.timeout_secs)?))
        }
        (None, None) => Err(usage("give --endpoint (or MEDCORPUS_LLM_ENDPOINT) or --stub")),
    }
}

fn llm_options(a: &crate::LlmArgs) -> LlmOptions {
    LlmOptions {
        model: a.model.clone(),
        temperature: a.temperature,
        ..LlmOptions::default()
    }
}

fn write_items(path: &Path, items: &[QAItem]) -> Result<()> {
    let mut w = create(path)?;
    write_jsonl(&mut w, items)?;
    w.flush()?;
    Ok(())
}

fn topics(a: &crate::TopicArgs) -> Result<()> {
    if a.attempts == 0 {
        return Err(usage("--attempts must be at least 1"));
    }
    let topics = load_topics(a.topics.as_deref())?;
    let client = llm_client(&a.llm)?;
    let opts = llm_options(&a.llm);
    let items = read_qa(&a.input)?;
    let results = map_bounded(&items, a.llm.max_in_flight, |it| {
        classify_topic(it, client.as_ref(), &topics, a.attempts, &opts)
    });
    let mut out = Vec::with_capacity(items.len());
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut failed = 0;
    for (item, r) in items.iter().zip(results) {
        let mut item = item.clone();
        match r {
            Ok(t) => {
                *counts.entry(t.clone()).or_default() += 1;
                item.topic = Some(t);
            }
            Err(e) => {
                log::warn!("item {}: {e}", item.id);
                failed += 1;
            }
        }
        out.push(item);
    }
    write_items(&a.out, &out)?;
    write_json(None, &json!({ "items": out.len(), "failed": failed, "topics": counts }))?;
    if failed > 0 {
        bail!("{failed} items could not be classified");
    }
    Ok(())
}

fn rationales(a: &crate::RationaleArgs) -> Result<()> {
    let client = llm_client(&a.llm)?;
    let opts = llm_options(&a.llm);
    let items = read_qa(&a.input)?;
    let results = map_bounded(&items, a.llm.max_in_flight, |it| generate_rationale(it, client.as_ref(), &opts));
    let mut out = Vec::with_capacity(items.len());
    let mut failed = 0;
    for (item, r) in items.iter().zip(results) {
        match r {
            Ok(done) => out.push(done),
            Err(e) => {
                log::warn!("item {}: {e}", item.id);
                failed += 1;
                out.push(item.clone());
            }
        }
    }
    write_items(&a.out, &out)?;
    write_json(None, &json!({ "items": out.len(), "generated": out.len() - failed, "failed": failed }))?;
    if failed > 0 {
        bail!("{failed} rationales could not be generated");
    }
    Ok(())
}

pub fn open_store(cli: &Cli, a: &crate::StoreArgs) -> Result<ReviewStore> {
    let policy = if a.annotators.is_empty() {
        AssignmentPolicy::All
    } else {
        if a.per_case == 0 || a.per_case > a.annotators.len() {
            return Err(usage("--per-case must be between 1 and the number of annotators"));
        }
        AssignmentPolicy::RoundRobin {
            annotators: a.annotators.clone(),
            per_case: a.per_case,
        }
    };
    let mut store = ReviewStore::from_files(&a.cases, &a.outputs, cli.seed, policy)?;
    store.attach_log(&a.log)?;
    Ok(store)
}

fn review_serve(cli: &Cli, a: &crate::ServeArgs) -> Result<()> {
    if a.token.trim().is_empty() {
        return Err(usage("--token must not be empty"));
    }
    let store = open_store(cli, &a.store)?;
    server::serve(store, a.token.clone(), &a.bind, a.port)
}

fn review_export(cli: &Cli, a: &crate::ExportArgs) -> Result<()> {
    let kind: TaskKind = a.kind.parse().map_err(|e: medcorpus_core::review::ReviewError| usage(e.to_string()))?;
    let store = open_store(cli, &a.store)?;
    let body = server::export_body(&store, kind)?;
    let mut w = output(a.out.as_deref())?;
    w.write_all(body.as_bytes())?;
    w.flush()?;
    Ok(())
}
