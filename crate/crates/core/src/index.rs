//! Embedded triple index and exact cosine top-k retrieval.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{EmbedError, EmbeddingProvider};
use crate::kg::{Graph, Triple};

/// Number of neighbours retrieved per pseudo-triple.
pub const DEFAULT_TOP_K: usize = 10;

const EMBED_BATCH: usize = 256;
const FILE_MAGIC: &str = "pgakv-index v1";

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("cannot index an empty graph")]
    EmptyGraph,
    #[error("embedding batch starting at triple {batch_start} failed: {source}")]
    Provider {
        batch_start: usize,
        #[source]
        source: EmbedError,
    },
    #[error("probe embedding failed: {0}")]
    Probe(#[source] EmbedError),
    #[error("stale index: built with `{index}`, queried with `{provider}`")]
    StaleIndex { index: String, provider: String },
    #[error("cannot query with an empty pseudo-graph")]
    EmptyProbeSet,
    #[error(transparent)]
    Cosine(#[from] CosineError),
    #[error("index file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CosineError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("zero vector")]
    ZeroVector,
}

/// `dot(a, b) / (|a| |b|)`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, CosineError> {
    if a.len() != b.len() {
        return Err(CosineError::DimensionMismatch(a.len(), b.len()));
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(CosineError::ZeroVector);
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Text handed to the embedder: the three fields joined by single spaces.
pub fn serialize_for_embedding(t: &Triple) -> String {
    format!("{} {} {}", t.subject(), t.relation(), t.object())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTriple {
    pub triple: Triple,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripleIndex {
    fingerprint: String,
    dimension: usize,
    triples: Vec<Triple>,
    vectors: Vec<Vec<f64>>,
}

impl TripleIndex {
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    fn check_provider(&self, p: &dyn EmbeddingProvider) -> Result<(), IndexError> {
        let fp = p.fingerprint();
        if fp != self.fingerprint {
            return Err(IndexError::StaleIndex {
                index: self.fingerprint.clone(),
                provider: fp,
            });
        }
        Ok(())
    }

    /// Cosine top-k against an already embedded probe. Ties keep insertion order.
    pub fn top_k_by_vector(&self, probe: &[f64], k: usize) -> Result<Vec<ScoredTriple>, IndexError> {
        let mut scored = self
            .vectors
            .iter()
            .enumerate()
            .map(|(i, v)| cosine(probe, v).map(|s| (i, s)))
            .collect::<Result<Vec<_>, _>>()?;
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(i, score)| ScoredTriple {
                triple: self.triples[i].clone(),
                score,
            })
            .collect())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{FILE_MAGIC}")?;
        writeln!(w, "fingerprint\t{}", self.fingerprint)?;
        writeln!(w, "dimension\t{}", self.dimension)?;
        writeln!(w, "entries\t{}", self.triples.len())?;
        for (t, v) in self.triples.iter().zip(&self.vectors) {
            write!(w, "{}\t{}\t{}\t", t.subject(), t.relation(), t.object())?;
            for (i, x) in v.iter().enumerate() {
                if i > 0 {
                    w.write_all(b" ")?;
                }
                write!(w, "{x}")?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, IndexError> {
        let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String), IndexError> {
            match lines.next() {
                Some((n, l)) => Ok((n, l?)),
                None => Err(IndexError::Format {
                    line: 0,
                    msg: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let bad = |line: usize, msg: &str| IndexError::Format {
            line,
            msg: msg.to_string(),
        };

        let (n, magic) = next("header")?;
        if magic != FILE_MAGIC {
            return Err(bad(n, "not a pgakv index file"));
        }
        let header = |(n, l): (usize, String), key: &str| -> Result<String, IndexError> {
            l.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix('\t'))
                .map(str::to_string)
                .ok_or_else(|| bad(n, &format!("expected `{key}` header")))
        };
        let fingerprint = header(next("fingerprint")?, "fingerprint")?;
        let (dn, dl) = next("dimension")?;
        let dimension: usize = header((dn, dl), "dimension")?
            .parse()
            .map_err(|_| bad(dn, "invalid dimension"))?;
        let (en, el) = next("entries")?;
        let count: usize = header((en, el), "entries")?
            .parse()
            .map_err(|_| bad(en, "invalid entry count"))?;

        let mut triples = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, line) = next("entry")?;
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(bad(n, "expected subject, relation, object and vector"));
            }
            let t = Triple::new(fields[0], fields[1], fields[2]).map_err(|e| bad(n, &e.to_string()))?;
            let v = fields[3]
                .split(' ')
                .map(str::parse::<f64>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad(n, "invalid vector component"))?;
            if v.len() != dimension {
                return Err(bad(n, "vector dimension differs from header"));
            }
            triples.push(t);
            vectors.push(v);
        }
        if let Some(Ok((n, extra))) = lines.next().map(|(n, l)| l.map(|l| (n, l))) {
            if !extra.is_empty() {
                return Err(bad(n, "trailing data after entries"));
            }
        }
        Ok(Self {
            fingerprint,
            dimension,
            triples,
            vectors,
        })
    }

    /// Loads an index and rejects it unless `p` has the fingerprint it was built with.
    pub fn read_checked<R: BufRead>(r: R, p: &dyn EmbeddingProvider) -> Result<Self, IndexError> {
        let index = Self::read_from(r)?;
        index.check_provider(p)?;
        Ok(index)
    }
}

/// Embeds every triple of `g`. Batches run in parallel; entry order follows `g`.
pub fn build_index(g: &Graph, p: &dyn EmbeddingProvider) -> Result<TripleIndex, IndexError> {
    if g.is_empty() {
        return Err(IndexError::EmptyGraph);
    }
    let texts: Vec<String> = g.iter().map(serialize_for_embedding).collect();
    let batches: Vec<Result<Vec<Vec<f64>>, IndexError>> = texts
        .par_chunks(EMBED_BATCH)
        .enumerate()
        .map(|(b, chunk)| {
            let batch_start = b * EMBED_BATCH;
            let vs = p
                .embed(chunk)
                .map_err(|source| IndexError::Provider { batch_start, source })?;
            if vs.len() != chunk.len() {
                return Err(IndexError::Provider {
                    batch_start,
                    source: EmbedError::CountMismatch {
                        want: chunk.len(),
                        got: vs.len(),
                    },
                });
            }
            Ok(vs)
        })
        .collect();
    let mut vectors = Vec::with_capacity(texts.len());
    for batch in batches {
        vectors.extend(batch?);
    }
    for (index, v) in vectors.iter().enumerate() {
        if v.len() != p.dimension() {
            return Err(IndexError::Provider {
                batch_start: index - index % EMBED_BATCH,
                source: EmbedError::Dimension {
                    index,
                    want: p.dimension(),
                    got: v.len(),
                },
            });
        }
    }
    Ok(TripleIndex {
        fingerprint: p.fingerprint(),
        dimension: p.dimension(),
        triples: g.triples().to_vec(),
        vectors,
    })
}

/// The `k` entries most similar to `probe`, best first.
pub fn query_top_k(
    index: &TripleIndex,
    probe: &Triple,
    p: &dyn EmbeddingProvider,
    k: usize,
) -> Result<Vec<ScoredTriple>, IndexError> {
    index.check_provider(p)?;
    let v = embed_single(p, serialize_for_embedding(probe))?;
    index.top_k_by_vector(&v, k)
}

/// Top-k for an arbitrary text, e.g. a question (used by the RAG baseline).
pub fn query_text_top_k(
    index: &TripleIndex,
    text: &str,
    p: &dyn EmbeddingProvider,
    k: usize,
) -> Result<Vec<ScoredTriple>, IndexError> {
    index.check_provider(p)?;
    let v = embed_single(p, text.to_string())?;
    index.top_k_by_vector(&v, k)
}

fn embed_single(p: &dyn EmbeddingProvider, text: String) -> Result<Vec<f64>, IndexError> {
    p.embed(&[text])
        .map_err(IndexError::Probe)?
        .into_iter()
        .next()
        .ok_or(IndexError::Probe(EmbedError::CountMismatch { want: 1, got: 0 }))
}

/// Union of each pseudo-triple's top-k. A triple found by several probes
/// appears once, at its first position, with its highest score.
pub fn build_temp_graph(
    index: &TripleIndex,
    pseudo: &Graph,
    p: &dyn EmbeddingProvider,
    k: usize,
) -> Result<Vec<ScoredTriple>, IndexError> {
    if pseudo.is_empty() {
        return Err(IndexError::EmptyProbeSet);
    }
    index.check_provider(p)?;
    let texts: Vec<String> = pseudo.iter().map(serialize_for_embedding).collect();
    let probes = p.embed(&texts).map_err(IndexError::Probe)?;
    let mut out: Vec<ScoredTriple> = Vec::new();
    let mut position: HashMap<Triple, usize> = HashMap::new();
    for probe in &probes {
        for hit in index.top_k_by_vector(probe, k)? {
            match position.get(&hit.triple) {
                Some(&i) => {
                    if hit.score > out[i].score {
                        out[i].score = hit.score;
                    }
                }
                None => {
                    position.insert(hit.triple.clone(), out.len());
                    out.push(hit);
                }
            }
        }
    }
    Ok(out)
}
