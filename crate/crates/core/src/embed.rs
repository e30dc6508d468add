//! Embedding providers.
//!
//! [`HashEmbedder`] is the built-in, offline provider: lowercase whitespace
//! tokens hashed into a fixed number of buckets, then L2-normalized.
//! [`RemoteEmbedder`] talks to an HTTP endpoint that accepts
//! `{"texts": [...]}` and returns `{"vectors": [[...], ...]}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("text {index} has no tokens")]
    EmptyText { index: usize },
    #[error("embedding endpoint error: {0}")]
    Transport(String),
    #[error("embedding endpoint returned {got} vectors for {want} texts")]
    CountMismatch { want: usize, got: usize },
    #[error("vector {index} has dimension {got}, expected {want}")]
    Dimension { index: usize, want: usize, got: usize },
    #[error("vector {index} is zero or not finite")]
    Degenerate { index: usize },
}

/// Maps texts to unit-norm vectors of a fixed dimension.
///
/// Equal texts must map to equal vectors for the lifetime of the provider.
pub trait EmbeddingProvider: Send + Sync {
    fn dimension(&self) -> usize;

    /// Identifies the model and settings; indexes built by one provider are
    /// only queryable through a provider with the same fingerprint.
    fn fingerprint(&self) -> String;

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError>;
}

/// Scales `v` to unit length in place. Returns false for zero or non-finite input.
pub fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    true
}

pub const DEFAULT_HASH_DIMENSION: usize = 64;

/// Feature-hashing embedder (FNV-1a over lowercase whitespace tokens).
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dimension: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_HASH_DIMENSION)
    }
}

impl HashEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        Self { dimension }
    }

    fn fnv1a(bytes: &[u8]) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in bytes {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }

    fn embed_one(&self, text: &str) -> Option<Vec<f64>> {
        let mut v = vec![0.0; self.dimension];
        let mut any = false;
        for token in text.split_whitespace() {
            let token = token.to_lowercase();
            let bucket = (Self::fnv1a(token.as_bytes()) % self.dimension as u64) as usize;
            v[bucket] += 1.0;
            any = true;
        }
        (any && normalize(&mut v)).then_some(v)
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn fingerprint(&self) -> String {
        format!("builtin-hash/fnv1a-lower-ws/d{}", self.dimension)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        texts
            .iter()
            .enumerate()
            .map(|(index, t)| self.embed_one(t).ok_or(EmbedError::EmptyText { index }))
            .collect()
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Client for a remote `{texts} -> {vectors}` embedding endpoint.
///
/// Returned vectors are re-normalized; the dimension is probed once on connect.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    url: String,
    dimension: usize,
    http: reqwest::blocking::Client,
}

impl RemoteEmbedder {
    pub fn connect(url: impl Into<String>) -> Result<Self, EmbedError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        let url = url.into();
        let probe = Self::post(&http, &url, &["dimension probe".to_string()])?;
        let dimension = probe.first().map(Vec::len).unwrap_or(0);
        if dimension == 0 {
            return Err(EmbedError::Degenerate { index: 0 });
        }
        Ok(Self { url, dimension, http })
    }

    fn post(http: &reqwest::blocking::Client, url: &str, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let resp = http
            .post(url)
            .json(&EmbedRequest { texts })
            .send()
            .and_then(reqwest::blocking::Response::error_for_status)
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        let body: EmbedResponse = resp.json().map_err(|e| EmbedError::Transport(e.to_string()))?;
        if body.vectors.len() != texts.len() {
            return Err(EmbedError::CountMismatch {
                want: texts.len(),
                got: body.vectors.len(),
            });
        }
        Ok(body.vectors)
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn fingerprint(&self) -> String {
        format!("remote/{}/d{}", self.url, self.dimension)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let mut vectors = Self::post(&self.http, &self.url, texts)?;
        for (index, v) in vectors.iter_mut().enumerate() {
            if v.len() != self.dimension {
                return Err(EmbedError::Dimension {
                    index,
                    want: self.dimension,
                    got: v.len(),
                });
            }
            if !normalize(v) {
                return Err(EmbedError::Degenerate { index });
            }
        }
        Ok(vectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn hash_vectors_are_unit_and_deterministic() {
        let e = HashEmbedder::default();
        let texts: Vec<String> = ["Berlin capital of Germany", "a", "x y z x"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let a = e.embed(&texts).unwrap();
        let b = e.embed(&texts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        for v in &a {
            assert_eq!(v.len(), 64);
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hash_is_case_insensitive() {
        let e = HashEmbedder::default();
        let v = e
            .embed(&["Alan TURING".to_string(), "alan turing".to_string()])
            .unwrap();
        assert_eq!(v[0], v[1]);
    }

    #[test]
    fn empty_text_rejected() {
        let e = HashEmbedder::default();
        let err = e.embed(&["ok".to_string(), "   ".to_string()]).unwrap_err();
        assert!(matches!(err, EmbedError::EmptyText { index: 1 }));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(HashEmbedder::fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(HashEmbedder::fnv1a(b"a"), 0xaf63dc4c8601ec8c);
    }
}
