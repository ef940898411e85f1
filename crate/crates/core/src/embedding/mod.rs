//! Embedding providers and the persistent embedding cache.
//!
//! A provider turns normalized text into fixed-dimension unit vectors. Two
//! providers ship here: [`HashEmbedder`], a deterministic offline
//! feature-hashing embedder, and [`RemoteEmbedder`], a client for an
//! OpenAI-compatible `/v1/embeddings` endpoint. [`embed_all_cached`] fronts
//! either of them with an [`EmbeddingCache`].

mod cache;
mod hashing;
mod remote;

use std::collections::{HashMap, HashSet};
use std::sync::Mutex;

use thiserror::Error;

pub use cache::{cache_key, EmbeddingCache, CACHE_KEY_SEPARATOR};
pub use hashing::{hash_embed, HashEmbedder, DEFAULT_HASH_DIMENSION, DEFAULT_HASH_SEED};
pub use remote::{RemoteConfig, RemoteEmbedder, API_KEY_ENV, DEFAULT_REMOTE_DIMENSION};

use crate::textualize::normalize_text;

pub const DEFAULT_MAX_BATCH: usize = 64;

/// Tolerance on the unit norm of a nonzero embedding.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("cache i/o error: {0}")]
    CacheIo(#[from] std::io::Error),
    #[error("cache error: {0}")]
    Cache(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl EmbedError {
    /// Errors raised by the provider itself rather than by local storage or
    /// input validation.
    pub fn is_provider_error(&self) -> bool {
        matches!(
            self,
            EmbedError::Transport(_) | EmbedError::Protocol(_) | EmbedError::Auth(_)
        )
    }
}

/// A finite vector that is either unit-length or exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn zeros(dimension: usize) -> Self {
        EmbeddingVector {
            values: vec![0.0; dimension],
        }
    }

    /// L2-normalizes `values`. All-zero input stays all-zero.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self, EmbedError> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(EmbedError::InvalidInput(format!(
                "non-finite component {bad}"
            )));
        }
        l2_normalize(&mut values);
        Ok(EmbeddingVector { values })
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

pub(crate) fn l2_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn l2_normalize(values: &mut [f64]) {
    let norm = l2_norm(values);
    if norm > 0.0 && norm.is_finite() {
        values.iter_mut().for_each(|v| *v /= norm);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderDescriptor {
    pub provider_id: String,
    pub dimension: usize,
}

impl ProviderDescriptor {
    pub fn new(provider_id: impl Into<String>, dimension: usize) -> Result<Self, EmbedError> {
        let provider_id = provider_id.into();
        if provider_id.is_empty() {
            return Err(EmbedError::InvalidInput("empty provider id".into()));
        }
        if dimension == 0 {
            return Err(EmbedError::InvalidInput(
                "provider dimension must be at least 1".into(),
            ));
        }
        Ok(ProviderDescriptor {
            provider_id,
            dimension,
        })
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn descriptor(&self) -> &ProviderDescriptor;

    /// Largest number of texts sent in one `embed_batch` call.
    fn max_batch(&self) -> usize {
        DEFAULT_MAX_BATCH
    }

    /// How many batches may be in flight at once.
    fn max_in_flight(&self) -> usize {
        1
    }

    /// Embeds normalized, nonempty texts. The result has one vector per
    /// input, in input order.
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn descriptor(&self) -> &ProviderDescriptor {
        (**self).descriptor()
    }
    fn max_batch(&self) -> usize {
        (**self).max_batch()
    }
    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        (**self).embed_batch(texts)
    }
}

/// Outcome of [`embed_all_cached`].
#[derive(Debug, Clone)]
pub struct CachedEmbeddings {
    /// One vector per input text, in input order.
    pub vectors: Vec<EmbeddingVector>,
    /// Number of texts sent to the provider.
    pub provider_calls: usize,
    /// Distinct nonempty texts served from the cache.
    pub cache_hits: usize,
}

/// Embeds `texts` through `cache`, sending only cache misses to `provider`.
///
/// Texts are normalized before keying. Duplicates within one request are
/// computed once, and empty texts map to the zero vector without a provider
/// call. Misses are split into batches of at most `provider.max_batch()`
/// and dispatched on up to `provider.max_in_flight()` threads; the result
/// does not depend on how misses were batched.
pub fn embed_all_cached<S: AsRef<str>>(
    texts: &[S],
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
) -> Result<CachedEmbeddings, EmbedError> {
    let descriptor = provider.descriptor();
    if descriptor.provider_id != cache.provider_id() || descriptor.dimension != cache.dimension() {
        return Err(EmbedError::Cache(format!(
            "cache opened for `{}` ({}-d) but provider is `{}` ({}-d)",
            cache.provider_id(),
            cache.dimension(),
            descriptor.provider_id,
            descriptor.dimension
        )));
    }

    let normalized: Vec<String> = texts.iter().map(|t| normalize_text(t.as_ref())).collect();
    let keys: Vec<Option<[u8; 32]>> = normalized
        .iter()
        .map(|t| (!t.is_empty()).then(|| cache.key(t)))
        .collect();

    // Held across lookup and insert so a key is computed at most once per
    // process even when several callers race on the same text.
    let _compute = cache.lock_compute();

    let mut resolved: HashMap<[u8; 32], EmbeddingVector> = HashMap::new();
    let mut misses: Vec<([u8; 32], String)> = Vec::new();
    let mut pending: HashSet<[u8; 32]> = HashSet::new();
    let mut cache_hits = 0;
    for (key, text) in keys.iter().zip(&normalized) {
        let Some(key) = key else { continue };
        if resolved.contains_key(key) || pending.contains(key) {
            continue;
        }
        match cache.get(key) {
            Some(v) => {
                cache_hits += 1;
                resolved.insert(*key, v);
            }
            None => {
                pending.insert(*key);
                misses.push((*key, text.clone()));
            }
        }
    }

    let provider_calls = misses.len();
    if !misses.is_empty() {
        let batch = provider.max_batch().max(1);
        let chunks: Vec<&[([u8; 32], String)]> = misses.chunks(batch).collect();
        let results = run_batches(provider, &chunks);
        let mut first_error = None;
        for (chunk, result) in chunks.iter().zip(results) {
            match result {
                Ok(vectors) => {
                    for ((key, _), vector) in chunk.iter().zip(vectors) {
                        let stored = cache.insert(*key, vector)?;
                        resolved.insert(*key, stored);
                    }
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        cache.flush()?;
        if let Some(e) = first_error {
            return Err(e);
        }
    }

    let dimension = cache.dimension();
    let vectors = keys
        .iter()
        .map(|key| match key {
            Some(k) => resolved[k].clone(),
            None => EmbeddingVector::zeros(dimension),
        })
        .collect();
    Ok(CachedEmbeddings {
        vectors,
        provider_calls,
        cache_hits,
    })
}

type BatchResult = Result<Vec<EmbeddingVector>, EmbedError>;

fn run_batches(
    provider: &dyn EmbeddingProvider,
    chunks: &[&[([u8; 32], String)]],
) -> Vec<BatchResult> {
    let dimension = provider.descriptor().dimension;
    let call = |chunk: &[([u8; 32], String)]| -> BatchResult {
        let texts: Vec<String> = chunk.iter().map(|(_, t)| t.clone()).collect();
        let vectors = provider.embed_batch(&texts)?;
        if vectors.len() != texts.len() {
            return Err(EmbedError::Protocol(format!(
                "provider returned {} vectors for {} texts",
                vectors.len(),
                texts.len()
            )));
        }
        if let Some(v) = vectors.iter().find(|v| v.dimension() != dimension) {
            return Err(EmbedError::DimensionMismatch {
                expected: dimension,
                actual: v.dimension(),
            });
        }
        Ok(vectors)
    };

    let workers = provider.max_in_flight().clamp(1, chunks.len().max(1));
    if workers == 1 {
        return chunks.iter().map(|c| call(c)).collect();
    }
    let slots: Vec<Mutex<Option<BatchResult>>> = chunks.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for worker in 0..workers {
            let slots = &slots;
            let call = &call;
            scope.spawn(move || {
                for idx in (worker..chunks.len()).step_by(workers) {
                    let result = call(chunks[idx]);
                    *slots[idx].lock().expect("slot poisoned") = Some(result);
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("slot poisoned")
                .expect("every chunk processed")
        })
        .collect()
}

/// Cosine similarity, clamped to `[-1, 1]`; 0.0 when either vector is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, EmbedError> {
    if a.len() != b.len() {
        return Err(EmbedError::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}
