//! `medcorpus` command line and review service.

pub mod commands;
pub mod http_llm;
pub mod io;
pub mod server;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Error that maps to exit code 1 (bad flags or flag combinations).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "medcorpus", version, about = "Medical corpus filtering and benchmark evaluation")]
pub struct Cli {
    /// Filter threshold config (JSON). Defaults to the shipped table.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads; 0 lets rayon decide.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Annotate a corpus with MKC/DENS and the keep decision.
    Filter(FilterArgs),
    /// Cut documents into overlapping token windows.
    Chunk(ChunkArgs),
    /// Draw a per-language review sample of kept records.
    Sample(SampleArgs),
    /// QA dataset statistics.
    Stats(StatsArgs),
    /// Order OCR boxes into page text.
    OcrOrder(OcrArgs),
    /// Split a QA file into train/val/test.
    Split(SplitArgs),
    /// Render prompts for every QA item.
    Prompts(PromptArgs),
    /// Score candidate rationales against references.
    Score(ScoreArgs),
    /// Kendall correlation between rankings and metric scores.
    Correlate(CorrelateArgs),
    /// Classify QA items into medical topics with an LLM.
    Topics(TopicArgs),
    /// Generate rationales for QA items with an LLM.
    Rationales(RationaleArgs),
    /// Serve annotation tasks over HTTP.
    ReviewServe(ServeArgs),
    /// Write de-anonymized annotations from a review log.
    ReviewExport(ExportArgs),
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "lexicons")]
    pub lexicons: PathBuf,
    /// Keep output in input order.
    #[arg(long)]
    pub ordered: bool,
    /// Defaults to `<out>.rejects.jsonl`.
    #[arg(long)]
    pub rejects: Option<PathBuf>,
    /// Write only kept records.
    #[arg(long)]
    pub kept_only: bool,
    /// Write the stats report here instead of stdout.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[arg(long, default_value = "default")]
    pub tokenizer: String,
}

#[derive(Debug, Args)]
pub struct ChunkArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = medcorpus_core::DEFAULT_CHUNK_SIZE)]
    pub size: usize,
    #[arg(long, default_value_t = medcorpus_core::DEFAULT_CHUNK_OVERLAP)]
    pub overlap: usize,
    #[arg(long, default_value = "default")]
    pub tokenizer: String,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = medcorpus_core::sample::DEFAULT_REVIEW_SAMPLE)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "default")]
    pub tokenizer: String,
}

#[derive(Debug, Args)]
pub struct OcrArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Page ranges to drop, e.g. "1-3,250-260".
    #[arg(long)]
    pub exclude: Option<String>,
    #[arg(long, default_value_t = medcorpus_core::ocr::DEFAULT_ROW_OVERLAP)]
    pub row_overlap: f64,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Directory for train/val/test.jsonl; defaults to the input's directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value = "8:1:1")]
    pub ratios: String,
}

#[derive(Debug, Args)]
pub struct PromptArgs {
    #[arg(long)]
    pub kind: String,
    /// Language name used in the prompt; defaults to each item's language.
    #[arg(long)]
    pub lang: Option<String>,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Topic list, one per line (topic_classify).
    #[arg(long)]
    pub topics: Option<PathBuf>,
    /// Model outputs JSON-lines {"case_id","model","text"} (judge_ranking).
    #[arg(long)]
    pub outputs: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmoothingArg {
    None,
    AddEpsilon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrientationArg {
    Candidate,
    Reference,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Candidates {"id","model"?,"lang"?,"text"}.
    #[arg(long)]
    pub cand: PathBuf,
    /// References {"id","lang","text"?,"answers"?}.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long, default_value = "bleu1,bleu,rouge1,rouge2,rougeL")]
    pub metrics: String,
    /// Documents {"text"} for idf; defaults to the references.
    #[arg(long)]
    pub idf_corpus: Option<PathBuf>,
    /// Candidate embeddings {"id","model"?,"tokens","vectors"}.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Reference embeddings {"id","tokens","vectors"}.
    #[arg(long)]
    pub ref_embeddings: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SmoothingArg::None)]
    pub smoothing: SmoothingArg,
    #[arg(long, value_enum, default_value_t = OrientationArg::Candidate)]
    pub orientation: OrientationArg,
    #[arg(long, default_value = "default")]
    pub tokenizer: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-pair scores {"case_id","model","lang","metric","score"} for `correlate`.
    #[arg(long)]
    pub point_scores: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Ranking records; human ones form the reference scores, judge and
    /// metric ones are correlated like metrics.
    #[arg(long)]
    pub rankings: PathBuf,
    #[arg(long)]
    pub metric_scores: Option<PathBuf>,
    /// Case languages {"case_id","lang"}; otherwise taken from the metric scores.
    #[arg(long)]
    pub cases: Option<PathBuf>,
    #[arg(long)]
    pub per_language: bool,
    /// Also print the aggregated human score matrix.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LlmArgs {
    /// Chat-completions endpoint. Token comes from MEDCORPUS_LLM_TOKEN.
    #[arg(long, env = "MEDCORPUS_LLM_ENDPOINT")]
    pub endpoint: Option<String>,
    #[arg(long, default_value = "gpt-4")]
    pub model: String,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    /// Offline rules {"match","response"} instead of an endpoint.
    #[arg(long)]
    pub stub: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    #[arg(long, default_value_t = 60)]
    pub timeout_secs: u64,
}

#[derive(Debug, Args)]
pub struct TopicArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub topics: Option<PathBuf>,
    #[arg(long, default_value_t = medcorpus_core::llm::DEFAULT_TOPIC_ATTEMPTS)]
    pub attempts: usize,
    #[command(flatten)]
    pub llm: LlmArgs,
}

#[derive(Debug, Args)]
pub struct RationaleArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub llm: LlmArgs,
}

#[derive(Debug, Args)]
pub struct StoreArgs {
    /// Cases {"case_id","lang","question","options","answers","reference_rationale"?}.
    #[arg(long)]
    pub cases: PathBuf,
    /// Model outputs {"case_id","model","text"}.
    #[arg(long)]
    pub outputs: PathBuf,
    /// Append-only event log.
    #[arg(long, default_value = "review.log.jsonl")]
    pub log: PathBuf,
    /// Round-robin annotator ids, comma separated; absent means everyone gets every case.
    #[arg(long, value_delimiter = ',')]
    pub annotators: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub per_case: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, env = "MEDCORPUS_REVIEW_TOKEN", hide_env_values = true)]
    pub token: String,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    #[arg(long, default_value = "ranking")]
    pub kind: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.quiet);
    match commands::dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &anyhow::Error) -> i32 {
    if e.downcast_ref::<UsageError>().is_some() {
        EXIT_USAGE
    } else {
        EXIT_DATA
    }
}

fn init_logging(quiet: bool) {
    let default = if quiet { "error" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default))
        .format_target(false)
        .try_init();
}
