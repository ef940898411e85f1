//! Client for an OpenAI-compatible embeddings endpoint.
//!
//! Request: `POST <base_url>/v1/embeddings` with
//! `{"model":"<id>","input":["t1",...]}`. Response:
//! `{"data":[{"index":0,"embedding":[...]},...],"model":"<id>"}`. The bearer
//! token comes from `LPG_EMBED_API_KEY`. Transport failures and 5xx/429
//! responses are retried with exponential backoff; 401/403 fail at once.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{
    EmbedError, EmbeddingProvider, EmbeddingVector, ProviderDescriptor, DEFAULT_MAX_BATCH,
};

pub const API_KEY_ENV: &str = "LPG_EMBED_API_KEY";
pub const DEFAULT_REMOTE_DIMENSION: usize = 1024;

const MAX_RESPONSE_BYTES: u64 = 512 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteConfig {
    pub base_url: String,
    pub model: String,
    pub dimension: usize,
    pub max_batch: usize,
    pub max_in_flight: usize,
    pub timeout_secs: f64,
    pub retries: u32,
    pub backoff_base_ms: u64,
    pub backoff_factor: u32,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            base_url: "http://localhost:8080".into(),
            model: "Qwen/Qwen3-Embedding-0.6B".into(),
            dimension: DEFAULT_REMOTE_DIMENSION,
            max_batch: DEFAULT_MAX_BATCH,
            max_in_flight: 4,
            timeout_secs: 30.0,
            retries: 3,
            backoff_base_ms: 250,
            backoff_factor: 2,
        }
    }
}

impl RemoteConfig {
    pub fn endpoint(&self) -> String {
        format!("{}/v1/embeddings", self.base_url.trim_end_matches('/'))
    }

    /// Delay before retry number `retry` (0-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = u64::from(self.backoff_factor).saturating_pow(retry);
        Duration::from_millis(self.backoff_base_ms.saturating_mul(factor))
    }
}

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: &'a [String],
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    index: usize,
    embedding: Vec<f64>,
}

pub struct RemoteEmbedder {
    config: RemoteConfig,
    descriptor: ProviderDescriptor,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl std::fmt::Debug for RemoteEmbedder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteEmbedder")
            .field("config", &self.config)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl RemoteEmbedder {
    /// Builds a client, reading the API key from the environment.
    pub fn new(config: RemoteConfig) -> Result<Self, EmbedError> {
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::with_api_key(config, api_key)
    }

    pub fn with_api_key(config: RemoteConfig, api_key: Option<String>) -> Result<Self, EmbedError> {
        if config.max_batch == 0 || config.max_in_flight == 0 {
            return Err(EmbedError::InvalidInput(
                "max_batch and max_in_flight must be positive".into(),
            ));
        }
        if !(config.timeout_secs > 0.0 && config.timeout_secs.is_finite()) {
            return Err(EmbedError::InvalidInput(
                "timeout_secs must be positive".into(),
            ));
        }
        let descriptor = ProviderDescriptor::new(
            format!("{}:d{}", config.model, config.dimension),
            config.dimension,
        )?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .build()
            .into();
        Ok(RemoteEmbedder {
            config,
            descriptor,
            api_key,
            agent,
        })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn attempt(&self, body: &[u8]) -> Result<Vec<u8>, Attempt> {
        let mut request = self
            .agent
            .post(&self.config.endpoint())
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request.send(body).map_err(|e| {
            Attempt::Retry(format!("request to {} failed: {e}", self.config.endpoint()))
        })?;
        let status = response.status().as_u16();
        match status {
            200..=299 => response
                .body_mut()
                .with_config()
                .limit(MAX_RESPONSE_BYTES)
                .read_to_vec()
                .map_err(|e| Attempt::Retry(format!("reading response body failed: {e}"))),
            401 | 403 => Err(Attempt::Fatal(EmbedError::Auth(status))),
            429 | 500..=599 => Err(Attempt::Retry(format!("server answered HTTP {status}"))),
            _ => Err(Attempt::Fatal(EmbedError::Transport(format!(
                "server answered HTTP {status}"
            )))),
        }
    }

    fn decode(&self, bytes: &[u8], expected: usize) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let response: EmbeddingResponse = serde_json::from_slice(bytes)
            .map_err(|e| EmbedError::Protocol(format!("invalid response body: {e}")))?;
        let mut slots: Vec<Option<Vec<f64>>> = vec![None; expected];
        for datum in response.data {
            let slot = slots.get_mut(datum.index).ok_or_else(|| {
                EmbedError::Protocol(format!(
                    "index {} out of range for {expected} inputs",
                    datum.index
                ))
            })?;
            if slot.is_some() {
                return Err(EmbedError::Protocol(format!(
                    "index {} returned twice",
                    datum.index
                )));
            }
            if datum.embedding.len() != self.descriptor.dimension {
                return Err(EmbedError::Protocol(format!(
                    "embedding {} has dimension {}, expected {}",
                    datum.index,
                    datum.embedding.len(),
                    self.descriptor.dimension
                )));
            }
            *slot = Some(datum.embedding);
        }
        slots
            .into_iter()
            .enumerate()
            .map(|(i, slot)| {
                let values = slot.ok_or_else(|| {
                    EmbedError::Protocol(format!("missing embedding for index {i}"))
                })?;
                EmbeddingVector::normalized(values)
                    .map_err(|e| EmbedError::Protocol(format!("embedding {i}: {e}")))
            })
            .collect()
    }
}

enum Attempt {
    Retry(String),
    Fatal(EmbedError),
}

impl EmbeddingProvider for RemoteEmbedder {
    fn descriptor(&self) -> &ProviderDescriptor {
        &self.descriptor
    }

    fn max_batch(&self) -> usize {
        self.config.max_batch
    }

    fn max_in_flight(&self) -> usize {
        self.config.max_in_flight
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        if texts.len() > self.config.max_batch {
            return Err(EmbedError::InvalidInput(format!(
                "batch of {} exceeds max_batch {}",
                texts.len(),
                self.config.max_batch
            )));
        }
        if texts.iter().any(|t| t.is_empty()) {
            return Err(EmbedError::InvalidInput(
                "empty text sent to remote provider".into(),
            ));
        }
        let body = serde_json::to_vec(&EmbeddingRequest {
            model: &self.config.model,
            input: texts,
        })
        .map_err(|e| EmbedError::InvalidInput(e.to_string()))?;

        let mut retry = 0;
        loop {
            match self.attempt(&body) {
                Ok(bytes) => return self.decode(&bytes, texts.len()),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(message)) => {
                    if retry >= self.config.retries {
                        return Err(EmbedError::Transport(format!(
                            "{message} (gave up after {} attempts)",
                            retry + 1
                        )));
                    }
                    let delay = self.config.backoff(retry);
                    log::warn!("{message}; retrying in {delay:?}");
                    std::thread::sleep(delay);
                    retry += 1;
                }
            }
        }
    }
}
