//! LLM client contract, an OpenAI-style chat-completion client, request
//! throttling, and cassettes for recording and replaying completions.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::{Condvar, Mutex};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("LLM transport error: {0}")]
    Transport(String),
    #[error("LLM endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed LLM response: {0}")]
    Decode(String),
    #[error("no cassette entry for request digest {digest}")]
    ReplayMiss { digest: String },
    #[error("cassette digest {digest} matches a different request")]
    DigestCollision { digest: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlmParams {
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl LlmParams {
    pub fn greedy(max_tokens: u32) -> Self {
        Self {
            temperature: 0.0,
            max_tokens,
            seed: None,
        }
    }
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, prompt: &str, params: &LlmParams) -> Result<String, LlmError>;
}

impl<T: LlmClient + ?Sized> LlmClient for &T {
    fn complete(&self, prompt: &str, params: &LlmParams) -> Result<String, LlmError> {
        (**self).complete(prompt, params)
    }
}

impl<T: LlmClient + ?Sized> LlmClient for Arc<T> {
    fn complete(&self, prompt: &str, params: &LlmParams) -> Result<String, LlmError> {
        (**self).complete(prompt, params)
    }
}

impl<T: LlmClient + ?Sized> LlmClient for Box<T> {
    fn complete(&self, prompt: &str, params: &LlmParams) -> Result<String, LlmError> {
        (**self).complete(prompt, params)
    }
}

// ---------------------------------------------------------------------------
// Cassettes

/// Hex SHA-256 over the JSON encoding of `{prompt, params}`.
pub fn request_digest(prompt: &str, params: &LlmParams) -> String {
    #[derive(Serialize)]
    struct Key<'a> {
        prompt: &'a str,
        params: &'a LlmParams,
    }
    let bytes = serde_json::to_vec(&Key { prompt, params }).expect("request key serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub digest: String,
    pub prompt: String,
    pub params: LlmParams,
    pub response: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CassetteMode {
    Record,
    Replay,
}

#[derive(Debug, Error)]
pub enum CassetteError {
    #[error("cassette I/O: {0}")]
    Io(#[from] io::Error),
    #[error("cassette JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cassette entry {index}: stored digest does not match its request")]
    BadDigest { index: usize },
}

/// Ordered request/response pairs, persisted as a JSON array.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cassette {
    pub entries: Vec<CassetteEntry>,
}

impl Cassette {
    pub fn from_reader<R: Read>(r: R) -> Result<Self, CassetteError> {
        let c: Cassette = serde_json::from_reader(r)?;
        for (index, e) in c.entries.iter().enumerate() {
            if request_digest(&e.prompt, &e.params) != e.digest {
                return Err(CassetteError::BadDigest { index });
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CassetteError> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }

    pub fn to_writer<W: Write>(&self, mut w: W) -> Result<(), CassetteError> {
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), CassetteError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.to_writer(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Serves completions from a cassette. Read-only after construction.
#[derive(Debug)]
pub struct ReplayClient {
    entries: Vec<CassetteEntry>,
    by_digest: HashMap<String, usize>,
    hits: AtomicUsize,
}

impl ReplayClient {
    pub fn new(cassette: Cassette) -> Self {
        let mut by_digest = HashMap::new();
        for (i, e) in cassette.entries.iter().enumerate() {
            by_digest.entry(e.digest.clone()).or_insert(i);
        }
        Self {
            entries: cassette.entries,
            by_digest,
            hits: AtomicUsize::new(0),
        }
    }

    /// Number of requests served so far.
    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }
}

impl LlmClient for ReplayClient {
    fn complete(&self, prompt: &str, params: &LlmParams) -> Result<String, LlmError> {
        let digest = request_digest(prompt, params);
        let Some(&i) = self.by_digest.get(&digest) else {
            return Err(LlmError::ReplayMiss { digest });
        };
        let e = &self.entries[i];
        if e.prompt != prompt || e.params != *params {
            return Err(LlmError::DigestCollision { digest });
        }
        self.hits.fetch_add(1, Ordering::Relaxed);
        Ok(e.response.clone())
    }
}

/// Forwards to `inner` and records each new request. A request already on
/// the cassette is answered from it without calling `inner`.
pub struct RecordingClient<C> {
    inner: C,
    state: Mutex<(Cassette, HashMap<String, usize>)>,
}

impl<C: LlmClient> RecordingClient<C> {
    pub fn new(inner: C) -> Self {
        Self::extending(inner, Cassette::default())
    }

    pub fn extending(inner: C, cassette: Cassette) -> Self {
        let index = cassette
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.digest.clone(), i))
            .collect();
        Self {
            inner,
            state: Mutex::new((cassette, index)),
        }
    }

    pub fn cassette(&self) -> Cassette {
        self.state.lock().0.clone()
    }
}

impl<C: LlmClient> LlmClient for RecordingClient<C> {
    fn complete(&self, prompt: &str, params: &LlmParams) -> Result<String, LlmError> {
        let digest = request_digest(prompt, params);
        let known = {
            let state = self.state.lock();
            state.1.get(&digest).map(|&i| state.0.entries[i].response.clone())
        };
        if let Some(response) = known {
            return Ok(response);
        }
        let response = self.inner.complete(prompt, params)?;
        let mut state = self.state.lock();
        if let Some(&i) = state.1.get(&digest) {
            return Ok(state.0.entries[i].response.clone());
        }
        let i = state.0.entries.len();
        state.0.entries.push(CassetteEntry {
            digest: digest.clone(),
            prompt: prompt.to_string(),
            params: *params,
            response: response.clone(),
        });
        state.1.insert(digest, i);
        Ok(response)
    }
}

/// A request seen by [`CallLog`].
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedCall {
    pub prompt: String,
    pub params: LlmParams,
}

/// Wraps a client and remembers every request, in call order.
pub struct CallLog<C> {
    inner: C,
    calls: Mutex<Vec<LoggedCall>>,
}

impl<C: LlmClient> CallLog<C> {
    pub fn new(inner: C) -> Self {
        Self {
            inner,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<LoggedCall> {
        self.calls.lock().clone()
    }

    pub fn count(&self) -> usize {
        self.calls.lock().len()
    }

    pub fn inner(&self) -> &C {
        &self.inner
    }
}

impl<C: LlmClient> LlmClient for CallLog<C> {
    fn complete(&self, prompt: &str, params: &LlmParams) -> Result<String, LlmError> {
        self.calls.lock().push(LoggedCall {
            prompt: prompt.to_string(),
            params: *params,
        });
        self.inner.complete(prompt, params)
    }
}

// ---------------------------------------------------------------------------
// Throttling

struct Bucket {
    tokens: f64,
    last: Instant,
}

/// Caps concurrent in-flight requests and applies a token-bucket rate limit.
pub struct Throttled<C> {
    inner: C,
    max_in_flight: usize,
    in_flight: Mutex<usize>,
    slot_freed: Condvar,
    rate_per_sec: Option<f64>,
    burst: f64,
    bucket: Mutex<Bucket>,
}

impl<C: LlmClient> Throttled<C> {
    /// `rate_per_sec = None` disables rate limiting.
    pub fn new(inner: C, max_in_flight: usize, rate_per_sec: Option<f64>) -> Self {
        let burst = rate_per_sec.map_or(1.0, |r| r.max(1.0));
        Self {
            inner,
            max_in_flight: max_in_flight.max(1),
            in_flight: Mutex::new(0),
            slot_freed: Condvar::new(),
            rate_per_sec,
            burst,
            bucket: Mutex::new(Bucket {
                tokens: burst,
                last: Instant::now(),
            }),
        }
    }

    fn take_token(&self) {
        let Some(rate) = self.rate_per_sec else { return };
        loop {
            let wait = {
                let mut b = self.bucket.lock();
                let now = Instant::now();
                b.tokens = (b.tokens + now.duration_since(b.last).as_secs_f64() * rate).min(self.burst);
                b.last = now;
                if b.tokens >= 1.0 {
                    b.tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - b.tokens) / rate)
            };
            std::thread::sleep(wait);
        }
    }
}

impl<C: LlmClient> LlmClient for Throttled<C> {
    fn complete(&self, prompt: &str, params: &LlmParams) -> Result<String, LlmError> {
        {
            let mut n = self.in_flight.lock();
            while *n >= self.max_in_flight {
                self.slot_freed.wait(&mut n);
            }
            *n += 1;
        }
        self.take_token();
        let result = self.inner.complete(prompt, params);
        *self.in_flight.lock() -= 1;
        self.slot_freed.notify_one();
        result
    }
}

// ---------------------------------------------------------------------------
// HTTP

pub const API_KEY_ENV: &str = "PGAKV_API_KEY";

/// Client for an OpenAI-compatible `/chat/completions` endpoint.
pub struct ChatClient {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: Option<String>,
}

impl ChatClient {
    /// `base_url` is the API root, e.g. `https://api.openai.com/v1`. The API
    /// key is read from `PGAKV_API_KEY` when `api_key` is `None`.
    pub fn new(base_url: &str, model: impl Into<String>, api_key: Option<String>) -> Result<Self, LlmError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(Self {
            endpoint: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            model: model.into(),
            api_key: api_key.or_else(|| std::env::var(API_KEY_ENV).ok()),
            http,
        })
    }
}

impl LlmClient for ChatClient {
    fn complete(&self, prompt: &str, params: &LlmParams) -> Result<String, LlmError> {
        let body = ChatRequest {
            model: &self.model,
            messages: [ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: params.temperature,
            max_tokens: params.max_tokens,
            seed: params.seed,
        };
        let mut req = self.http.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(LlmError::Status {
                status: status.as_u16(),
                body: resp.text().unwrap_or_default(),
            });
        }
        let parsed: ChatResponse = resp.json().map_err(|e| LlmError::Decode(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::Decode("response has no message content".into()))
    }
}
