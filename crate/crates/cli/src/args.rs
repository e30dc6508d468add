use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pgakv_core::{DatasetFormat, Strategy};

/// Knowledge-graph question answering with pseudo-graph generation and
/// atomic knowledge verification.
///
/// The LLM API key is read from PGAKV_API_KEY only.
#[derive(Debug, Parser)]
#[command(name = "pgakv", version)]
pub struct Cli {
    /// Flat TOML file of defaults; flags and environment variables override it.
    #[arg(long, global = true, env = "PGAKV_CONFIG")]
    pub config: Option<PathBuf>,

    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed every triple of a KG file and write the index cache.
    Index(IndexArgs),
    /// Answer one question and optionally write its trace.
    Ask(AskArgs),
    /// Run a strategy over a question set and report its score.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Tab-separated KG file.
    #[arg(long, env = "PGAKV_KG")]
    pub kg: Option<PathBuf>,
    /// Where to write the index cache.
    #[arg(long, env = "PGAKV_INDEX")]
    pub index: Option<PathBuf>,
    /// `builtin-hash` or the URL of an embedding service.
    #[arg(long, env = "PGAKV_PROVIDER")]
    pub provider: Option<String>,
}

/// Settings shared by `ask` and `eval`.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// KG file; used to build an in-memory index when no --index is given.
    #[arg(long, env = "PGAKV_KG")]
    pub kg: Option<PathBuf>,
    /// Index cache written by `pgakv index`.
    #[arg(long, env = "PGAKV_INDEX")]
    pub index: Option<PathBuf>,
    /// `builtin-hash` or the URL of an embedding service.
    #[arg(long, env = "PGAKV_PROVIDER")]
    pub provider: Option<String>,
    /// Base URL of an OpenAI-compatible chat API.
    #[arg(long, env = "PGAKV_LLM_URL")]
    pub llm_url: Option<String>,
    #[arg(long, env = "PGAKV_MODEL")]
    pub model: Option<String>,
    /// Cassette file of recorded LLM calls.
    #[arg(long, env = "PGAKV_CASSETTE")]
    pub cassette: Option<PathBuf>,
    /// Serve LLM calls from the cassette only (the default).
    #[arg(long, conflicts_with = "record")]
    pub replay: bool,
    /// Call the live LLM and append new calls to the cassette.
    #[arg(long)]
    pub record: bool,
    /// Minimum entity confidence kept by pruning [default: 0.7].
    #[arg(long, env = "PGAKV_THRESHOLD")]
    pub threshold: Option<f64>,
    /// Matches retrieved per pseudo-graph triple [default: 10].
    #[arg(long, env = "PGAKV_TOPK")]
    pub topk: Option<usize>,
    /// Extra attempts at pseudo-graph generation [default: 2].
    #[arg(long, env = "PGAKV_MAX_RETRIES")]
    pub max_retries: Option<usize>,
    /// Items evaluated at once, and the cap on in-flight LLM calls [default: 1].
    #[arg(long, env = "PGAKV_CONCURRENCY")]
    pub concurrency: Option<usize>,
    /// Seed for subset sampling [default: 0].
    #[arg(long, env = "PGAKV_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AskArgs {
    pub question: String,
    #[command(flatten)]
    pub run: RunArgs,
    /// Write the trace JSON here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSON-lines question file.
    pub dataset: PathBuf,
    /// simplequestions, qald10 or nature.
    #[arg(long)]
    pub format: DatasetFormat,
    /// pgakv, io, cot, sc or rag.
    #[arg(long, default_value = "pgakv")]
    pub strategy: Strategy,
    /// Evaluate a seeded random subset of this many items.
    #[arg(long)]
    pub subset: Option<usize>,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}
