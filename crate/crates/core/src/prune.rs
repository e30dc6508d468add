//! Two-step pruning of the retrieved temporary graph into the ground-truth graph.
//!
//! 1. Candidate selection: keep the `k` subjects that head the most retrieved
//!    triples, where `k` is the number of distinct pseudo-graph subjects.
//! 2. Semantic ranking: drop subjects whose entity confidence (mean cosine
//!    score over their retrieved triples) is below the threshold.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::ScoredTriple;
use crate::kg::{Graph, Stage};

pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityConfidence {
    pub subject: String,
    pub confidence: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PruneError {
    #[error("subject `{0}` does not occur in the temporary graph")]
    SubjectNotFound(String),
    #[error("confidence threshold {0} is outside [-1, 1]")]
    Threshold(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    pub confidence_threshold: f64,
    /// Replaces `|subjects(G_p)|` as the candidate count when set.
    pub k_override: Option<usize>,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            k_override: None,
        }
    }
}

impl PruneConfig {
    pub fn with_threshold(threshold: f64) -> Result<Self, PruneError> {
        if !(-1.0..=1.0).contains(&threshold) {
            return Err(PruneError::Threshold(threshold.to_string()));
        }
        Ok(Self {
            confidence_threshold: threshold,
            k_override: None,
        })
    }
}

struct SubjectStats {
    count: usize,
    max_score: f64,
    sum: f64,
}

fn stats(temp: &[ScoredTriple]) -> HashMap<&str, SubjectStats> {
    let mut out: HashMap<&str, SubjectStats> = HashMap::new();
    for st in temp {
        let e = out.entry(st.triple.subject()).or_insert(SubjectStats {
            count: 0,
            max_score: f64::NEG_INFINITY,
            sum: 0.0,
        });
        e.count += 1;
        e.sum += st.score;
        if st.score > e.max_score {
            e.max_score = st.score;
        }
    }
    out
}

/// The `k` subjects with the most triples in `temp`, best first.
///
/// Ties: higher maximum triple score, then lexicographic order.
pub fn candidate_selection(temp: &[ScoredTriple], k: usize) -> Vec<String> {
    let stats = stats(temp);
    let mut ranked: Vec<(&str, &SubjectStats)> = stats.iter().map(|(s, st)| (*s, st)).collect();
    ranked.sort_by(|a, b| {
        b.1.count
            .cmp(&a.1.count)
            .then_with(|| b.1.max_score.total_cmp(&a.1.max_score))
            .then_with(|| a.0.cmp(b.0))
    });
    ranked.into_iter().take(k).map(|(s, _)| s.to_string()).collect()
}

/// Mean score of the triples in `temp` whose subject is `subject`.
pub fn entity_confidence(temp: &[ScoredTriple], subject: &str) -> Result<EntityConfidence, PruneError> {
    let mut sum = 0.0;
    let mut support = 0;
    for st in temp.iter().filter(|st| st.triple.subject() == subject) {
        sum += st.score;
        support += 1;
    }
    if support == 0 {
        return Err(PruneError::SubjectNotFound(subject.to_string()));
    }
    Ok(EntityConfidence {
        subject: subject.to_string(),
        confidence: sum / support as f64,
        support,
    })
}

fn by_confidence_desc(a: &EntityConfidence, b: &EntityConfidence) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then_with(|| a.subject.cmp(&b.subject))
}

/// Prunes `temp` into the ground-truth graph.
///
/// Returns the surviving triples in `temp` order and the surviving subjects'
/// confidences, highest first.
pub fn prune(temp: &[ScoredTriple], pseudo: &Graph, cfg: &PruneConfig) -> (Graph, Vec<EntityConfidence>) {
    let k = cfg.k_override.unwrap_or_else(|| pseudo.subjects().len());
    let candidates = candidate_selection(temp, k);
    let mut kept: Vec<EntityConfidence> = candidates
        .iter()
        .filter_map(|s| entity_confidence(temp, s).ok())
        .filter(|c| c.confidence >= cfg.confidence_threshold)
        .collect();
    kept.sort_by(by_confidence_desc);

    let keep: std::collections::HashSet<&str> = kept.iter().map(|c| c.subject.as_str()).collect();
    let graph = Graph::from_triples(
        Stage::GroundTruth,
        temp.iter()
            .filter(|st| keep.contains(st.triple.subject()))
            .map(|st| st.triple.clone()),
    );
    (graph, kept)
}
