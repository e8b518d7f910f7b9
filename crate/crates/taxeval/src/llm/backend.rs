//! Generation backends: a deterministic offline mock and an HTTP client for
//! chat-completion-style endpoints.

use crate::corpus::SingleErrorInstance;
use crate::taxonomy::Taxonomy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use thiserror::Error;

/// Environment variable holding the HTTP backend credential.
pub const API_KEY_ENV: &str = "TAXEVAL_API_KEY";

/// One generation request. The prompt is what an HTTP backend sends; the
/// mock consults the instance and taxonomy directly.
pub struct GenRequest<'a> {
    pub instance: &'a SingleErrorInstance,
    pub taxonomy: &'a Taxonomy,
    pub prompt: &'a str,
    pub k: usize,
    pub temperature: f64,
    pub seed: u64,
    pub sample_index: usize,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("endpoint returned status {status}: {body}")]
    BadStatus { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    BadResponse(String),
}

pub trait Backend: Send + Sync {
    /// Produces the raw reply text for one (instance, sample) pair.
    fn generate(&self, request: &GenRequest<'_>) -> Result<String, BackendError>;
}

/// Offline backend whose replies are a pure function of
/// (seed, instance id, sample index).
///
/// It answers with the instance's gold label at high confidence plus k-1
/// low-confidence distractor leaves; with probability `ambiguity` a second
/// label is promoted above the default threshold so Overlap > 1 occurs.
pub struct MockBackend {
    pub ambiguity: f64,
}

impl MockBackend {
    pub fn new(ambiguity: f64) -> MockBackend {
        MockBackend { ambiguity }
    }

    // ChaCha8 has a specified stream, so replies stay stable across
    // dependency upgrades, not just within one build.
    fn rng_for(seed: u64, instance_id: &str, sample_index: usize) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(instance_id.as_bytes());
        hasher.update((sample_index as u64).to_le_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(key)
    }
}

impl Backend for MockBackend {
    fn generate(&self, request: &GenRequest<'_>) -> Result<String, BackendError> {
        let mut rng =
            Self::rng_for(request.seed, &request.instance.id, request.sample_index);
        let taxonomy = request.taxonomy;
        let leaves = taxonomy.leaf_codes();

        let gold = request
            .instance
            .gold_labels
            .get(&taxonomy.id)
            .and_then(|raw| taxonomy.canonical_label(raw))
            .unwrap_or_else(|| leaves[rng.gen_range(0..leaves.len())].clone());

        let gold_conf: f64 = rng.gen_range(0.75..0.99);
        let mut pool: Vec<&str> =
            leaves.iter().map(String::as_str).filter(|c| **c != gold).collect();
        let mut picks: Vec<(String, f64)> = vec![(gold.clone(), gold_conf)];
        for _ in 1..request.k {
            if pool.is_empty() {
                break;
            }
            let leaf = pool.swap_remove(rng.gen_range(0..pool.len()));
            picks.push((leaf.to_string(), rng.gen_range(0.01..0.30)));
        }
        if picks.len() > 1 && rng.gen_bool(self.ambiguity.clamp(0.0, 1.0)) {
            // Promote the first distractor close under the gold confidence.
            picks[1].1 = 0.705 + rng.gen::<f64>() * (gold_conf - 0.705 - 1e-6).max(0.0);
        }
        picks[1..].sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite confidences"));

        let mut reply = String::new();
        for (i, (label, conf)) in picks.iter().enumerate() {
            writeln!(reply, "{}. {} | {:.6}", i + 1, label, conf).unwrap();
        }
        Ok(reply)
    }
}

/// Chat-completion-style HTTP backend: POST {model, messages, temperature},
/// reply text taken from `choices[0].message.content`. The credential comes
/// from the `TAXEVAL_API_KEY` environment variable when set.
pub struct HttpBackend {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(endpoint: String, model: String) -> HttpBackend {
        Self::with_api_key(endpoint, model, std::env::var(API_KEY_ENV).ok())
    }

    pub fn with_api_key(endpoint: String, model: String, api_key: Option<String>) -> HttpBackend {
        HttpBackend { endpoint, model, api_key, client: reqwest::blocking::Client::new() }
    }
}

impl Backend for HttpBackend {
    fn generate(&self, request: &GenRequest<'_>) -> Result<String, BackendError> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": request.prompt }],
            "temperature": request.temperature,
        });
        let mut http = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            http = http.bearer_auth(key);
        }
        let response = http.send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::BadStatus { status: status.as_u16(), body: text });
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| BackendError::BadResponse(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                BackendError::BadResponse("missing choices[0].message.content".to_string())
            })
    }
}

/// Builds a backend from its config descriptor.
pub fn make_backend(spec: &super::BackendSpec) -> Box<dyn Backend> {
    match spec {
        super::BackendSpec::Mock { ambiguity } => Box::new(MockBackend::new(*ambiguity)),
        super::BackendSpec::Http { endpoint, model } => {
            Box::new(HttpBackend::new(endpoint.clone(), model.clone()))
        }
    }
}
