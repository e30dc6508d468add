//! End-to-end question answering: pseudo-graph generation, retrieval,
//! pruning, verification and answer generation.

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cypher::decode_llm_output;
use crate::embed::EmbeddingProvider;
use crate::index::{build_temp_graph, IndexError, ScoredTriple, TripleIndex, DEFAULT_TOP_K};
use crate::kg::{Graph, Stage};
use crate::llm::{LlmClient, LlmError, LlmParams};
use crate::prompts::{io_prompt, PromptBundle, PromptError};
use crate::prune::{prune, EntityConfidence, PruneConfig};

pub const DEFAULT_MAX_RETRIES: usize = 2;

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("no usable pseudo-graph after {attempts} attempts; last error: {last_error}")]
    Exhausted { attempts: usize, last_error: String },
    #[error("empty question")]
    EmptyQuestion,
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("empty question")]
    EmptyQuestion,
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub top_k: usize,
    pub prune: PruneConfig,
    pub max_retries: usize,
    /// Pseudo-graph generation and verification.
    pub structure_params: LlmParams,
    pub answer_params: LlmParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            top_k: DEFAULT_TOP_K,
            prune: PruneConfig::default(),
            max_retries: DEFAULT_MAX_RETRIES,
            structure_params: LlmParams::greedy(512),
            answer_params: LlmParams::greedy(256),
        }
    }
}

/// A successfully generated pseudo-graph and how many retries it took.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoGraph {
    pub graph: Graph,
    pub retries: usize,
}

/// Asks the LLM for Cypher and decodes it. Decoding failures are retried up
/// to `max_retries` times with the error appended to the prompt; transport
/// errors are returned immediately.
pub fn generate_pseudo_graph(
    question: &str,
    llm: &dyn LlmClient,
    bundle: &PromptBundle,
    params: &LlmParams,
    max_retries: usize,
) -> Result<PseudoGraph, GenerationError> {
    if question.trim().is_empty() {
        return Err(GenerationError::EmptyQuestion);
    }
    let mut prompt = bundle.pseudo_graph_prompt(question);
    let mut last_error = String::new();
    for attempt in 0..=max_retries {
        let reply = llm.complete(&prompt, params)?;
        match decode_llm_output(&reply) {
            Ok(graph) => {
                return Ok(PseudoGraph {
                    graph,
                    retries: attempt,
                })
            }
            Err(e) => {
                last_error = e.to_string();
                prompt = bundle.pseudo_graph_retry_prompt(question, &last_error);
            }
        }
    }
    Err(GenerationError::Exhausted {
        attempts: max_retries + 1,
        last_error,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verified {
    pub graph: Graph,
    pub attempts: usize,
    /// The LLM never produced a usable graph; `graph` is `merge(G_g, G_p)`.
    pub fell_back: bool,
}

/// Has the LLM correct `pseudo` against `ground_truth`. One retry on an
/// unparseable reply, then falls back to `merge(ground_truth, pseudo)`.
pub fn verify(
    pseudo: &Graph,
    ground_truth: &Graph,
    confidences: &[EntityConfidence],
    llm: &dyn LlmClient,
    bundle: &PromptBundle,
    params: &LlmParams,
) -> Result<Verified, PipelineError> {
    let base = bundle.verification_prompt(pseudo, ground_truth, confidences)?;
    let mut prompt = base.clone();
    for attempt in 1..=2 {
        let reply = llm.complete(&prompt, params)?;
        let fixed = Graph::from_lines(Stage::Fixed, &reply);
        if !fixed.is_empty() {
            return Ok(Verified {
                graph: fixed,
                attempts: attempt,
                fell_back: false,
            });
        }
        prompt = bundle.verification_retry_prompt(&base);
    }
    warn!("verification output unparseable twice; using ground truth followed by pseudo-graph");
    Ok(Verified {
        graph: ground_truth.merge(pseudo).with_stage(Stage::Fixed),
        attempts: 2,
        fell_back: true,
    })
}

/// Answers from the fixed graph; the reply is returned trimmed.
pub fn answer(
    question: &str,
    fixed: &Graph,
    llm: &dyn LlmClient,
    bundle: &PromptBundle,
    params: &LlmParams,
) -> Result<String, LlmError> {
    Ok(llm
        .complete(&bundle.answer_prompt(question, fixed), params)?
        .trim()
        .to_string())
}

/// Fallback names recorded in [`Trace::fallbacks`].
pub const FALLBACK_DIRECT_ANSWER: &str = "direct_answer";
pub const FALLBACK_VERIFICATION_MERGE: &str = "verification_merge";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trace {
    pub question: String,
    pub degraded: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generation_error: Option<String>,
    pub pseudo_graph: Option<Graph>,
    pub generation_attempts: usize,
    pub temp_graph_size: usize,
    pub temp_graph: Vec<ScoredTriple>,
    pub ground_truth_graph: Option<Graph>,
    pub confidences: Vec<EntityConfidence>,
    pub fixed_graph: Option<Graph>,
    /// Extra LLM calls beyond one per stage (generation plus verification retries).
    pub retries: usize,
    pub fallbacks: Vec<String>,
    pub llm_calls: usize,
    pub config: PipelineConfig,
}

impl Trace {
    fn new(question: &str, cfg: &PipelineConfig) -> Self {
        Self {
            question: question.to_string(),
            degraded: false,
            generation_error: None,
            pseudo_graph: None,
            generation_attempts: 0,
            temp_graph_size: 0,
            temp_graph: Vec::new(),
            ground_truth_graph: None,
            confidences: Vec::new(),
            fixed_graph: None,
            retries: 0,
            fallbacks: Vec::new(),
            llm_calls: 0,
            config: *cfg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub answer: String,
    pub trace: Trace,
}

/// The embedder and LLM a pipeline run talks to.
#[derive(Clone, Copy)]
pub struct Providers<'a> {
    pub embedder: &'a dyn EmbeddingProvider,
    pub llm: &'a dyn LlmClient,
}

/// Runs the full pipeline for one question. If no pseudo-graph can be
/// generated, answers directly and marks the trace as degraded.
pub fn run_pipeline(
    question: &str,
    index: &TripleIndex,
    providers: Providers<'_>,
    bundle: &PromptBundle,
    cfg: &PipelineConfig,
) -> Result<PipelineOutcome, PipelineError> {
    if question.trim().is_empty() {
        return Err(PipelineError::EmptyQuestion);
    }
    let question = question.trim();
    let llm = providers.llm;
    let mut trace = Trace::new(question, cfg);

    let pseudo = match generate_pseudo_graph(question, llm, bundle, &cfg.structure_params, cfg.max_retries) {
        Ok(p) => p,
        Err(GenerationError::Exhausted { attempts, last_error }) => {
            warn!("pseudo-graph generation failed after {attempts} attempts: {last_error}");
            trace.degraded = true;
            trace.generation_error = Some(last_error);
            trace.generation_attempts = attempts;
            trace.retries = attempts - 1;
            trace.fallbacks.push(FALLBACK_DIRECT_ANSWER.to_string());
            let answer = llm.complete(&io_prompt(question), &cfg.answer_params)?;
            trace.llm_calls = attempts + 1;
            return Ok(PipelineOutcome {
                answer: answer.trim().to_string(),
                trace,
            });
        }
        Err(GenerationError::Llm(e)) => return Err(e.into()),
        Err(GenerationError::EmptyQuestion) => return Err(PipelineError::EmptyQuestion),
    };
    trace.generation_attempts = pseudo.retries + 1;
    trace.retries = pseudo.retries;
    trace.llm_calls = pseudo.retries + 1;

    let temp = build_temp_graph(index, &pseudo.graph, providers.embedder, cfg.top_k)?;
    let (ground_truth, confidences) = prune(&temp, &pseudo.graph, &cfg.prune);
    trace.temp_graph_size = temp.len();
    trace.temp_graph = temp;

    let verified = verify(
        &pseudo.graph,
        &ground_truth,
        &confidences,
        llm,
        bundle,
        &cfg.structure_params,
    )?;
    trace.llm_calls += verified.attempts;
    trace.retries += verified.attempts - 1;
    if verified.fell_back {
        trace.fallbacks.push(FALLBACK_VERIFICATION_MERGE.to_string());
    }

    let answer = answer(question, &verified.graph, llm, bundle, &cfg.answer_params)?;
    trace.llm_calls += 1;

    trace.pseudo_graph = Some(pseudo.graph);
    trace.ground_truth_graph = Some(ground_truth);
    trace.confidences = confidences;
    trace.fixed_graph = Some(verified.graph);
    Ok(PipelineOutcome { answer, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::HashEmbedder;
    use crate::index::build_index;
    use crate::kg::Triple;
    use crate::llm::CallLog;
    use std::collections::VecDeque;
    use std::sync::Mutex;

    /// Replies from a fixed script, in order.
    struct Script(Mutex<VecDeque<&'static str>>);

    impl Script {
        fn new(replies: &[&'static str]) -> Self {
            Self(Mutex::new(replies.iter().copied().collect()))
        }
    }

    impl LlmClient for Script {
        fn complete(&self, _: &str, _: &LlmParams) -> Result<String, LlmError> {
            self.0
                .lock()
                .unwrap()
                .pop_front()
                .map(str::to_string)
                .ok_or_else(|| LlmError::Transport("script exhausted".into()))
        }
    }

    const VALID: &str = "```cypher\nCREATE (a {name: \"Alan Turing\"})-[:FIELD_OF_WORK]->(b {name: \"Biology\"})\n```";

    fn t(s: &str, r: &str, o: &str) -> Triple {
        Triple::new(s, r, o).unwrap()
    }

    #[test]
    fn retry_after_invalid_cypher() {
        let llm = CallLog::new(Script::new(&["MERGE (a)", VALID]));
        let b = PromptBundle::default();
        let out = generate_pseudo_graph("q?", &llm, &b, &LlmParams::greedy(10), 2).unwrap();
        assert_eq!(out.retries, 1);
        assert_eq!(out.graph.triples(), &[t("Alan Turing", "field of work", "Biology")]);
        let calls = llm.calls();
        assert_eq!(calls.len(), 2);
        assert!(calls[1].prompt.contains("unsupported clause MERGE"));
    }

    #[test]
    fn exhaustion_after_all_retries() {
        let llm = CallLog::new(Script::new(&["prose", "prose", "prose", "unused"]));
        let b = PromptBundle::default();
        let err = generate_pseudo_graph("q?", &llm, &b, &LlmParams::greedy(10), 2).unwrap_err();
        assert!(matches!(err, GenerationError::Exhausted { attempts: 3, .. }));
        assert_eq!(llm.count(), 3);
    }

    #[test]
    fn verify_vacuous_and_fallback() {
        let b = PromptBundle::default();
        let gp = Graph::from_triples(Stage::Pseudo, [t("a", "r", "b")]);
        let echo = Script::new(&["a | r | b"]);
        let v = verify(
            &gp,
            &Graph::new(Stage::GroundTruth),
            &[],
            &echo,
            &b,
            &LlmParams::greedy(10),
        )
        .unwrap();
        assert_eq!(v.graph.triples(), gp.triples());
        assert!(!v.fell_back);

        let gg = Graph::from_triples(Stage::GroundTruth, [t("a", "r", "c")]);
        let conf = [EntityConfidence {
            subject: "a".into(),
            confidence: 0.9,
            support: 1,
        }];
        let junk = CallLog::new(Script::new(&["I think it is fine.", "Still fine."]));
        let v = verify(&gp, &gg, &conf, &junk, &b, &LlmParams::greedy(10)).unwrap();
        assert!(v.fell_back);
        assert_eq!(v.attempts, 2);
        assert_eq!(v.graph.stage(), Stage::Fixed);
        assert_eq!(v.graph.triples(), &[t("a", "r", "c"), t("a", "r", "b")]);
        assert_eq!(junk.count(), 2);
    }

    #[test]
    fn answer_is_trimmed_and_empty_graph_marked() {
        let b = PromptBundle::default();
        let llm = CallLog::new(Script::new(&["  Berlin.\n"]));
        let a = answer(
            "Capital of Germany?",
            &Graph::default(),
            &llm,
            &b,
            &LlmParams::greedy(5),
        )
        .unwrap();
        assert_eq!(a, "Berlin.");
        assert!(llm.calls()[0].prompt.contains("(no verified facts)"));
    }

    fn index() -> (TripleIndex, HashEmbedder) {
        let p = HashEmbedder::default();
        let g = Graph::from_triples(
            Stage::Source,
            [
                t("Alan Turing", "field of work", "Computer Science"),
                t("Berlin", "capital of", "Germany"),
            ],
        );
        (build_index(&g, &p).unwrap(), p)
    }

    #[test]
    fn pipeline_counts_calls() {
        let (idx, emb) = index();
        let llm = CallLog::new(Script::new(&[
            VALID,
            "Alan Turing | field of work | Computer Science",
            "Computer science.",
        ]));
        let out = run_pipeline(
            "What field did Alan Turing work in?",
            &idx,
            Providers {
                embedder: &emb,
                llm: &llm,
            },
            &PromptBundle::default(),
            &PipelineConfig::default(),
        )
        .unwrap();
        assert_eq!(out.answer, "Computer science.");
        assert!(!out.trace.degraded);
        assert_eq!(out.trace.llm_calls, 3);
        assert_eq!(llm.count(), 3);
        assert_eq!(out.trace.retries, 0);
        let gg = out.trace.ground_truth_graph.as_ref().unwrap();
        assert_eq!(gg.triples(), &[t("Alan Turing", "field of work", "Computer Science")]);
        assert_eq!(out.trace.temp_graph_size, 2);
    }

    #[test]
    fn degraded_when_generation_fails() {
        let (idx, emb) = index();
        let llm = CallLog::new(Script::new(&["no", "no", "no", "Berlin"]));
        let out = run_pipeline(
            "Capital of Germany?",
            &idx,
            Providers {
                embedder: &emb,
                llm: &llm,
            },
            &PromptBundle::default(),
            &PipelineConfig::default(),
        )
        .unwrap();
        assert!(out.trace.degraded);
        assert_eq!(out.answer, "Berlin");
        assert_eq!(out.trace.llm_calls, 4);
        assert_eq!(out.trace.fallbacks, [FALLBACK_DIRECT_ANSWER]);
        assert!(out.trace.pseudo_graph.is_none());
    }

    #[test]
    fn transport_errors_escape() {
        let (idx, emb) = index();
        let llm = Script::new(&[]);
        let err = run_pipeline(
            "q?",
            &idx,
            Providers {
                embedder: &emb,
                llm: &llm,
            },
            &PromptBundle::default(),
            &PipelineConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, PipelineError::Llm(LlmError::Transport(_))));
    }
}
