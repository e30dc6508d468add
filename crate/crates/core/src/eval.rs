//! Runs the pipeline or a baseline over a question set and scores it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Metric, QaItem};
use crate::embed::EmbeddingProvider;
use crate::index::{query_text_top_k, IndexError, TripleIndex};
use crate::kg::{Graph, Stage};
use crate::llm::{LlmClient, LlmError, LlmParams};
use crate::metrics::{hit_at_1, normalize_text, rouge_l_f1};
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineError, Providers, Trace};
use crate::prompts::{cot_prompt, io_prompt, PromptBundle};

pub const SC_SAMPLES: usize = 3;
pub const SC_TEMPERATURE: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Pgakv,
    Io,
    Cot,
    Sc,
    Rag,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Pgakv,
        Strategy::Io,
        Strategy::Cot,
        Strategy::Sc,
        Strategy::Rag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Pgakv => "pgakv",
            Strategy::Io => "io",
            Strategy::Cot => "cot",
            Strategy::Sc => "sc",
            Strategy::Rag => "rag",
        }
    }

    fn needs_index(self) -> bool {
        matches!(self, Strategy::Pgakv | Strategy::Rag)
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no items to evaluate")]
    NoItems,
    #[error("strategy {0} needs a triple index and an embedder")]
    MissingIndex(&'static str),
    #[error("cannot build a thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub metric: Metric,
    pub pipeline: PipelineConfig,
    /// Items evaluated at once.
    pub concurrency: usize,
    /// Evaluate a seeded random subset of this size instead of every item.
    pub subset: Option<usize>,
    pub seed: u64,
}

impl EvalConfig {
    pub fn new(metric: Metric) -> Self {
        Self {
            metric,
            pipeline: PipelineConfig::default(),
            concurrency: 1,
            subset: None,
            seed: 0,
        }
    }
}

/// What a strategy may call on.
#[derive(Clone, Copy)]
pub struct EvalDeps<'a> {
    pub llm: &'a dyn LlmClient,
    pub embedder: Option<&'a dyn EmbeddingProvider>,
    pub index: Option<&'a TripleIndex>,
    pub bundle: &'a PromptBundle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemError {
    /// `replay_miss`, `llm` or `retrieval`.
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub llm_calls: usize,
    pub degraded: bool,
    pub retries: usize,
    pub fallbacks: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generation_attempts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pseudo_graph_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub temp_graph_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ground_truth_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fixed_graph_size: Option<usize>,
}

impl TraceSummary {
    fn baseline(llm_calls: usize) -> Self {
        Self {
            llm_calls,
            degraded: false,
            retries: 0,
            fallbacks: Vec::new(),
            generation_attempts: None,
            pseudo_graph_size: None,
            temp_graph_size: None,
            ground_truth_size: None,
            fixed_graph_size: None,
        }
    }

    fn of(trace: &Trace) -> Self {
        Self {
            llm_calls: trace.llm_calls,
            degraded: trace.degraded,
            retries: trace.retries,
            fallbacks: trace.fallbacks.clone(),
            generation_attempts: Some(trace.generation_attempts),
            pseudo_graph_size: trace.pseudo_graph.as_ref().map(Graph::len),
            temp_graph_size: Some(trace.temp_graph_size),
            ground_truth_size: trace.ground_truth_graph.as_ref().map(Graph::len),
            fixed_graph_size: trace.fixed_graph.as_ref().map(Graph::len),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub id: String,
    pub answer: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<ItemError>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<TraceSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub metric: Metric,
    pub mean: f64,
    pub item_count: usize,
    pub degraded_count: usize,
    pub error_count: usize,
    /// Share of pseudo-graph generation attempts that decoded (pgakv only).
    pub pseudo_graph_validity_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub strategy: Strategy,
    pub config: serde_json::Value,
    pub records: Vec<ItemRecord>,
    pub aggregate: Aggregate,
}

impl EvalReport {
    pub fn aggregate_of(metric: Metric, records: &[ItemRecord]) -> Aggregate {
        let n = records.len();
        let mean = if n == 0 {
            0.0
        } else {
            records.iter().map(|r| r.value).sum::<f64>() / n as f64
        };
        let mut attempts = 0usize;
        let mut valid = 0usize;
        for t in records.iter().filter_map(|r| r.trace.as_ref()) {
            if let Some(a) = t.generation_attempts {
                attempts += a;
                valid += usize::from(!t.degraded);
            }
        }
        Aggregate {
            metric,
            mean,
            item_count: n,
            degraded_count: records
                .iter()
                .filter(|r| r.trace.as_ref().is_some_and(|t| t.degraded))
                .count(),
            error_count: records.iter().filter(|r| r.error.is_some()).count(),
            pseudo_graph_validity_rate: (attempts > 0).then(|| valid as f64 / attempts as f64),
        }
    }

    /// Digests of every replay miss, in item order.
    pub fn replay_misses(&self) -> Vec<&str> {
        self.records
            .iter()
            .filter_map(|r| r.error.as_ref())
            .filter(|e| e.kind == "replay_miss")
            .map(|e| e.message.as_str())
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text summary table.
    pub fn render_table(&self) -> String {
        let a = &self.aggregate;
        let mut out = String::new();
        let rows = [
            ("strategy", self.strategy.name().to_string()),
            ("metric", a.metric.name().to_string()),
            ("mean", format!("{:.4}", a.mean)),
            ("items", a.item_count.to_string()),
            ("degraded", a.degraded_count.to_string()),
            ("errors", a.error_count.to_string()),
            (
                "pseudo-graph validity",
                a.pseudo_graph_validity_rate
                    .map_or_else(|| "-".to_string(), |v| format!("{v:.4}")),
            ),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        out
    }
}

/// Picks `n` items with a seeded RNG, keeping dataset order.
pub fn select_subset(items: &[QaItem], n: usize, seed: u64) -> Vec<QaItem> {
    if n >= items.len() {
        return items.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, items.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| items[i].clone()).collect()
}

/// Text after the last "the answer is", or the whole reply.
pub fn final_answer(reply: &str) -> String {
    let lower = reply.to_ascii_lowercase();
    let marker = "the answer is";
    let Some(pos) = lower.rfind(marker) else {
        return reply.trim().to_string();
    };
    let tail = reply[pos + marker.len()..].trim().trim_end_matches(['.', '!']).trim();
    if tail.is_empty() {
        reply.trim().to_string()
    } else {
        tail.to_string()
    }
}

/// Plurality vote over normalized answers; ties go to the earliest sample.
pub fn vote(samples: &[String]) -> Option<&String> {
    let mut counts: HashMap<String, (usize, usize)> = HashMap::new();
    for (i, s) in samples.iter().enumerate() {
        counts.entry(normalize_text(s)).or_insert((0, i)).0 += 1;
    }
    counts
        .values()
        .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|&(_, first)| &samples[first])
}

enum Failure {
    Llm(LlmError),
    Retrieval(String),
}

impl From<LlmError> for Failure {
    fn from(e: LlmError) -> Self {
        Failure::Llm(e)
    }
}

impl From<IndexError> for Failure {
    fn from(e: IndexError) -> Self {
        Failure::Retrieval(e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Llm(e) => Failure::Llm(e),
            other => Failure::Retrieval(other.to_string()),
        }
    }
}

fn answer_item(
    item: &QaItem,
    strategy: Strategy,
    deps: &EvalDeps<'_>,
    cfg: &EvalConfig,
) -> Result<(String, TraceSummary), Failure> {
    let llm = deps.llm;
    let params = cfg.pipeline.answer_params;
    match strategy {
        Strategy::Pgakv => {
            let (Some(index), Some(embedder)) = (deps.index, deps.embedder) else {
                unreachable!("checked in run_eval")
            };
            let out = run_pipeline(
                &item.question,
                index,
                Providers { embedder, llm },
                deps.bundle,
                &cfg.pipeline,
            )?;
            Ok((out.answer, TraceSummary::of(&out.trace)))
        }
        Strategy::Io => {
            let reply = llm.complete(&io_prompt(&item.question), &params)?;
            Ok((reply.trim().to_string(), TraceSummary::baseline(1)))
        }
        Strategy::Cot => {
            let reply = llm.complete(&cot_prompt(&item.question), &params)?;
            Ok((final_answer(&reply), TraceSummary::baseline(1)))
        }
        Strategy::Sc => {
            let prompt = cot_prompt(&item.question);
            let mut samples = Vec::with_capacity(SC_SAMPLES);
            for seed in 0..SC_SAMPLES as u64 {
                let p = LlmParams {
                    temperature: SC_TEMPERATURE,
                    max_tokens: params.max_tokens,
                    seed: Some(seed),
                };
                samples.push(final_answer(&llm.complete(&prompt, &p)?));
            }
            let winner = vote(&samples).cloned().unwrap_or_default();
            Ok((winner, TraceSummary::baseline(SC_SAMPLES)))
        }
        Strategy::Rag => {
            let (Some(index), Some(embedder)) = (deps.index, deps.embedder) else {
                unreachable!("checked in run_eval")
            };
            let hits = query_text_top_k(index, &item.question, embedder, cfg.pipeline.top_k)?;
            let evidence = Graph::from_triples(Stage::GroundTruth, hits.into_iter().map(|h| h.triple));
            let reply = llm.complete(&deps.bundle.answer_prompt(&item.question, &evidence), &params)?;
            Ok((reply.trim().to_string(), TraceSummary::baseline(1)))
        }
    }
}

fn score(metric: Metric, answer: &str, gold: &[String]) -> f64 {
    match metric {
        Metric::HitAt1 => f64::from(hit_at_1(answer, gold)),
        Metric::RougeLF1 => rouge_l_f1(answer, gold),
    }
}

fn evaluate_item(item: &QaItem, strategy: Strategy, deps: &EvalDeps<'_>, cfg: &EvalConfig) -> ItemRecord {
    match answer_item(item, strategy, deps, cfg) {
        Ok((answer, trace)) => ItemRecord {
            id: item.id.clone(),
            value: score(cfg.metric, &answer, &item.gold),
            answer,
            error: None,
            trace: Some(trace),
        },
        Err(failure) => {
            let error = match failure {
                Failure::Llm(LlmError::ReplayMiss { digest }) => ItemError {
                    kind: "replay_miss".into(),
                    message: digest,
                },
                Failure::Llm(e) => ItemError {
                    kind: "llm".into(),
                    message: e.to_string(),
                },
                Failure::Retrieval(message) => ItemError {
                    kind: "retrieval".into(),
                    message,
                },
            };
            log::warn!("item {}: {} error: {}", item.id, error.kind, error.message);
            ItemRecord {
                id: item.id.clone(),
                answer: String::new(),
                value: 0.0,
                error: Some(error),
                trace: None,
            }
        }
    }
}

/// Evaluates every item (or the configured subset). Item failures score 0
/// and are recorded; they never abort the run. Records follow dataset order.
pub fn run_eval(
    items: &[QaItem],
    strategy: Strategy,
    deps: EvalDeps<'_>,
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    if items.is_empty() {
        return Err(EvalError::NoItems);
    }
    if strategy.needs_index() && (deps.index.is_none() || deps.embedder.is_none()) {
        return Err(EvalError::MissingIndex(strategy.name()));
    }
    let selected = match cfg.subset {
        Some(n) => select_subset(items, n, cfg.seed),
        None => items.to_vec(),
    };
    let records: Vec<ItemRecord> = if cfg.concurrency <= 1 {
        selected
            .iter()
            .map(|it| evaluate_item(it, strategy, &deps, cfg))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.concurrency)
            .build()
            .map_err(|e| EvalError::ThreadPool(e.to_string()))?;
        pool.install(|| {
            selected
                .par_iter()
                .map(|it| evaluate_item(it, strategy, &deps, cfg))
                .collect()
        })
    };
    Ok(EvalReport {
        strategy,
        config: serde_json::to_value(cfg).expect("config serializes"),
        aggregate: EvalReport::aggregate_of(cfg.metric, &records),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: &str, gold: &str) -> QaItem {
        QaItem {
            id: id.into(),
            question: format!("question {id}?"),
            gold: vec![gold.into()],
        }
    }

    struct Fixed(&'static str);
    impl LlmClient for Fixed {
        fn complete(&self, _: &str, _: &LlmParams) -> Result<String, LlmError> {
            Ok(self.0.to_string())
        }
    }

    #[test]
    fn empty_items_rejected() {
        let b = PromptBundle::default();
        let deps = EvalDeps {
            llm: &Fixed("x"),
            embedder: None,
            index: None,
            bundle: &b,
        };
        assert!(matches!(
            run_eval(&[], Strategy::Io, deps, &EvalConfig::new(Metric::HitAt1)),
            Err(EvalError::NoItems)
        ));
        assert!(matches!(
            run_eval(&[item("a", "x")], Strategy::Rag, deps, &EvalConfig::new(Metric::HitAt1)),
            Err(EvalError::MissingIndex("rag"))
        ));
    }

    #[test]
    fn vote_plurality_and_first_tie_break() {
        let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(vote(&s(&["Paris", "Berlin.", "berlin"])).unwrap(), "Berlin.");
        assert_eq!(vote(&s(&["Rome", "Paris", "Berlin"])).unwrap(), "Rome");
        assert!(vote(&[]).is_none());
    }

    #[test]
    fn final_answer_extraction() {
        assert_eq!(
            final_answer("Cairo is the capital. So the answer is The Nile."),
            "The Nile"
        );
        assert_eq!(final_answer("Just Berlin"), "Just Berlin");
    }

    #[test]
    fn subset_is_seeded_and_ordered() {
        let items: Vec<QaItem> = (0..20).map(|i| item(&i.to_string(), "x")).collect();
        let a = select_subset(&items, 5, 42);
        let b = select_subset(&items, 5, 42);
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        let pos: Vec<usize> = a.iter().map(|q| q.id.parse().unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(select_subset(&items, 50, 1).len(), 20);
    }

    #[test]
    fn item_failures_are_contained() {
        struct Miss;
        impl LlmClient for Miss {
            fn complete(&self, _: &str, _: &LlmParams) -> Result<String, LlmError> {
                Err(LlmError::ReplayMiss { digest: "abc".into() })
            }
        }
        let b = PromptBundle::default();
        let deps = EvalDeps {
            llm: &Miss,
            embedder: None,
            index: None,
            bundle: &b,
        };
        let r = run_eval(
            &[item("a", "x"), item("b", "y")],
            Strategy::Io,
            deps,
            &EvalConfig::new(Metric::HitAt1),
        )
        .unwrap();
        assert_eq!(r.aggregate.error_count, 2);
        assert_eq!(r.aggregate.mean, 0.0);
        assert_eq!(r.replay_misses(), ["abc", "abc"]);
    }

    #[test]
    fn aggregate_matches_records() {
        let b = PromptBundle::default();
        let deps = EvalDeps {
            llm: &Fixed("It is Berlin"),
            embedder: None,
            index: None,
            bundle: &b,
        };
        let items = [item("a", "Berlin"), item("b", "Paris"), item("c", "berlin")];
        let mut cfg = EvalConfig::new(Metric::HitAt1);
        cfg.concurrency = 3;
        let r = run_eval(&items, Strategy::Io, deps, &cfg).unwrap();
        assert_eq!(
            r.records.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(),
            ["a", "b", "c"]
        );
        assert!((r.aggregate.mean - 2.0 / 3.0).abs() < 1e-12);
        assert!(r.aggregate.pseudo_graph_validity_rate.is_none());
        assert!(r.render_table().contains("mean"));
    }
}
