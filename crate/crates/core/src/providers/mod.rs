//! Embedding and completion endpoints.
//!
//! Both are traits so the index builder and retriever can run against an
//! OpenAI-compatible server ([`http`]) or the deterministic offline mocks
//! ([`mock`]). Implementations must be shareable across threads; results are
//! always returned in input order.

pub mod http;
pub mod mock;
mod vector;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use vector::{cosine_similarity, Embedding, VectorError};

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("transport error contacting {url}: {message}")]
    Transport { url: String, message: String },
    #[error("{url} returned status {status}: {body}")]
    Status { url: String, status: u16, body: String },
    #[error("cannot decode response from {url}: {message}")]
    Decode { url: String, message: String },
    #[error("empty response from {url}")]
    EmptyResponse { url: String },
    #[error("embedding dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid embedding: {0}")]
    InvalidVector(#[from] VectorError),
    #[error("invalid provider configuration: {0}")]
    Config(String),
}

impl ProviderError {
    /// Transport failures, throttling and server-side errors are retried.
    pub fn is_retryable(&self) -> bool {
        match self {
            ProviderError::Transport { .. } => true,
            ProviderError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

pub trait EmbeddingProvider: Send + Sync {
    /// Stable identity recorded in the index manifest, e.g. `openai:my-embedding-model`.
    fn identity(&self) -> String;

    /// Declared output dimension, when known before the first call.
    fn dimension(&self) -> Option<usize>;

    /// One vector per input text, in input order, all of one dimension.
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, ProviderError>;

    /// Upper bound on simultaneous outstanding requests.
    fn max_in_flight(&self) -> usize {
        1
    }
}

pub trait CompletionProvider: Send + Sync {
    fn model_name(&self) -> String;

    /// The first message text of the endpoint's reply, verbatim.
    fn complete(&self, prompt: &str) -> Result<String, ProviderError>;

    fn max_in_flight(&self) -> usize {
        1
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn identity(&self) -> String {
        (**self).identity()
    }
    fn dimension(&self) -> Option<usize> {
        (**self).dimension()
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, ProviderError> {
        (**self).embed(texts)
    }
    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }
}

impl<P: CompletionProvider + ?Sized> CompletionProvider for &P {
    fn model_name(&self) -> String {
        (**self).model_name()
    }
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        (**self).complete(prompt)
    }
    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn identity(&self) -> String {
        (**self).identity()
    }
    fn dimension(&self) -> Option<usize> {
        (**self).dimension()
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, ProviderError> {
        (**self).embed(texts)
    }
    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }
}

impl<P: CompletionProvider + ?Sized> CompletionProvider for Box<P> {
    fn model_name(&self) -> String {
        (**self).model_name()
    }
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        (**self).complete(prompt)
    }
    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }
}

/// Shared precondition checks for `embed` implementations.
pub(crate) fn check_embed_input(texts: &[String]) -> Result<(), ProviderError> {
    if texts.is_empty() {
        return Err(ProviderError::Precondition("empty embedding batch".into()));
    }
    if let Some(i) = texts.iter().position(|t| t.is_empty()) {
        return Err(ProviderError::Precondition(format!("text {i} in batch is empty")));
    }
    Ok(())
}

/// Verifies a batch shares one dimension (and the declared one, if any).
pub(crate) fn check_dimensions(
    vectors: &[Embedding],
    declared: Option<usize>,
) -> Result<(), ProviderError> {
    let Some(first) = vectors.first() else {
        return Ok(());
    };
    let expected = declared.unwrap_or(first.dim());
    for v in vectors {
        if v.dim() != expected {
            return Err(ProviderError::DimensionMismatch {
                expected,
                found: v.dim(),
            });
        }
    }
    Ok(())
}

/// Connection settings for an OpenAI-compatible endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: f64,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    /// Inputs longer than this many characters are truncated before sending.
    #[serde(default)]
    pub max_input_chars: Option<usize>,
    /// Declared embedding dimension; checked against every response.
    #[serde(default)]
    pub dimension: Option<usize>,
}

fn default_api_key_env() -> String {
    "OPENAI_API_KEY".into()
}
fn default_timeout_secs() -> f64 {
    60.0
}
fn default_max_in_flight() -> usize {
    4
}
fn default_batch_size() -> usize {
    32
}
fn default_retries() -> u32 {
    3
}
fn default_backoff_ms() -> u64 {
    500
}

impl ProviderConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model_name: model_name.into(),
            api_key_env: default_api_key_env(),
            timeout_secs: default_timeout_secs(),
            max_in_flight: default_max_in_flight(),
            batch_size: default_batch_size(),
            retries: default_retries(),
            backoff_ms: default_backoff_ms(),
            max_input_chars: None,
            dimension: None,
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.max_in_flight < 1 {
            return Err(ProviderError::Config("max_in_flight must be at least 1".into()));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(ProviderError::Config("timeout_secs must be positive".into()));
        }
        if self.batch_size < 1 {
            return Err(ProviderError::Config("batch_size must be at least 1".into()));
        }
        if self.base_url.trim().is_empty() {
            return Err(ProviderError::Config("base_url is empty".into()));
        }
        if self.model_name.trim().is_empty() {
            return Err(ProviderError::Config("model_name is empty".into()));
        }
        Ok(())
    }
}

/// Counting semaphore bounding simultaneous outstanding requests.
#[derive(Debug)]
pub struct InFlightGate {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

pub struct InFlightPermit<'a> {
    gate: &'a InFlightGate,
}

impl InFlightGate {
    pub fn new(limit: usize) -> Self {
        Self {
            limit: limit.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn acquire(&self) -> InFlightPermit<'_> {
        let mut active = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *active >= self.limit {
            active = self.freed.wait(active).unwrap_or_else(|e| e.into_inner());
        }
        *active += 1;
        InFlightPermit { gate: self }
    }
}

impl Drop for InFlightPermit<'_> {
    fn drop(&mut self) {
        let mut active = self.gate.active.lock().unwrap_or_else(|e| e.into_inner());
        *active -= 1;
        self.gate.freed.notify_one();
    }
}

/// Wraps a provider and counts calls made through it.
#[derive(Debug, Default)]
pub struct CallCounter<P> {
    inner: P,
    calls: AtomicU64,
}

impl<P> CallCounter<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::SeqCst);
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CallCounter<P> {
    fn identity(&self) -> String {
        self.inner.identity()
    }
    fn dimension(&self) -> Option<usize> {
        self.inner.dimension()
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.embed(texts)
    }
    fn max_in_flight(&self) -> usize {
        self.inner.max_in_flight()
    }
}

impl<P: CompletionProvider> CompletionProvider for CallCounter<P> {
    fn model_name(&self) -> String {
        self.inner.model_name()
    }
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(prompt)
    }
    fn max_in_flight(&self) -> usize {
        self.inner.max_in_flight()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;
    use std::sync::Arc;

    #[test]
    fn gate_bounds_concurrency() {
        let gate = Arc::new(InFlightGate::new(2));
        let current = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        std::thread::scope(|s| {
            for _ in 0..8 {
                let (gate, current, peak) = (gate.clone(), current.clone(), peak.clone());
                s.spawn(move || {
                    let _permit = gate.acquire();
                    let now = current.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(std::time::Duration::from_millis(5));
                    current.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
        assert!(peak.load(Ordering::SeqCst) >= 1);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ProviderConfig::new("http://localhost:8000", "m");
        assert!(cfg.validate().is_ok());
        cfg.max_in_flight = 0;
        assert!(cfg.validate().is_err());
        cfg.max_in_flight = 1;
        cfg.timeout_secs = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dimension_check_rejects_ragged_batches() {
        let vs = vec![Embedding(vec![1.0, 0.0]), Embedding(vec![1.0])];
        assert!(matches!(
            check_dimensions(&vs, None),
            Err(ProviderError::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert!(check_dimensions(&vs[..1], Some(3)).is_err());
    }
}
