//! Knowledge-graph-grounded question answering.
//!
//! An LLM drafts a pseudo-graph of triples for a question (as Cypher), each
//! pseudo-triple is matched against an embedded knowledge graph, the matches
//! are pruned by subject frequency and entity confidence, and the LLM corrects
//! its pseudo-graph against what survives before answering from it.

pub mod cypher;
pub mod dataset;
pub mod embed;
pub mod eval;
pub mod index;
pub mod kg;
pub mod llm;
pub mod metrics;
pub mod pipeline;
pub mod prompts;
pub mod prune;

pub use dataset::{load_dataset, DatasetFormat, Metric, QaItem};
pub use embed::{EmbeddingProvider, HashEmbedder, RemoteEmbedder};
pub use eval::{run_eval, EvalConfig, EvalDeps, EvalReport, Strategy};
pub use index::{build_index, build_temp_graph, query_top_k, ScoredTriple, TripleIndex};
pub use kg::{parse_triple_file, Graph, Stage, Triple};
pub use llm::{Cassette, LlmClient, LlmError, LlmParams, RecordingClient, ReplayClient};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutcome, Providers, Trace};
pub use prompts::PromptBundle;
pub use prune::{prune, EntityConfidence, PruneConfig};
