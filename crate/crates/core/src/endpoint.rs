//! HTTP adapters for external embedding and generation endpoints.
//!
//! Both adapters speak a minimal JSON protocol:
//!
//! - embedding: `POST {texts: [string]}` → `{vectors: [[number]]}`
//! - generation: `POST {persona_label, task, input_text, context,
//!   max_tokens, temperature, seed}` → `{text}`
//!
//! Endpoint URLs and the optional bearer credential come from
//! configuration (typically the `EPISTEMO_EMBED_URL`, `EPISTEMO_GEN_URL`
//! and `EPISTEMO_API_KEY` environment variables). Transient failures
//! (connect errors, HTTP 5xx) are retried with exponential backoff; 4xx
//! responses fail immediately as non-retryable. A configurable in-flight
//! cap bounds concurrent requests per adapter.
//!
//! Nothing in this module runs unless an endpoint is explicitly
//! configured; the offline defaults never touch the network.

use std::collections::BTreeSet;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::truncate_to_tokens;
use crate::error::{Error, Result};
use crate::generation::{
    BackendContract, BackendMode, GeneratedText, GenerationBackend, GenerationRequest,
    GenerationTask,
};
use crate::retrieval::{Embedder, EmbedderContract, EmbedderMode, EmbeddingVector};

/// Environment variable naming the external embedding endpoint.
pub const ENV_EMBED_URL: &str = "EPISTEMO_EMBED_URL";
/// Environment variable naming the external generation endpoint.
pub const ENV_GEN_URL: &str = "EPISTEMO_GEN_URL";
/// Environment variable holding the bearer credential for either endpoint.
pub const ENV_API_KEY: &str = "EPISTEMO_API_KEY";

/// Connection settings for one endpoint.
#[derive(Debug, Clone)]
pub struct EndpointConfig {
    pub url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    /// Additional attempts after the first (0 = no retries).
    pub max_retries: usize,
    /// Base backoff; attempt `i` sleeps `base * 2^i`.
    pub retry_backoff: Duration,
    /// Maximum concurrent in-flight requests through this adapter.
    pub max_in_flight: usize,
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>) -> Self {
        EndpointConfig {
            url: url.into(),
            api_key: None,
            timeout: Duration::from_secs(30),
            max_retries: 2,
            retry_backoff: Duration::from_millis(100),
            max_in_flight: 4,
        }
    }

    fn from_env_var(url_var: &str) -> Option<Self> {
        let url = std::env::var(url_var).ok().filter(|u| !u.is_empty())?;
        let mut cfg = EndpointConfig::new(url);
        cfg.api_key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        Some(cfg)
    }

    /// Embedding endpoint from `EPISTEMO_EMBED_URL`/`EPISTEMO_API_KEY`;
    /// `None` when unconfigured.
    pub fn embed_from_env() -> Option<Self> {
        Self::from_env_var(ENV_EMBED_URL)
    }

    /// Generation endpoint from `EPISTEMO_GEN_URL`/`EPISTEMO_API_KEY`;
    /// `None` when unconfigured.
    pub fn gen_from_env() -> Option<Self> {
        Self::from_env_var(ENV_GEN_URL)
    }
}

/// Counting gate bounding in-flight requests. `acquire` blocks while the
/// cap is reached and returns a guard that releases on drop.
#[derive(Debug)]
pub struct FlightGate {
    max: usize,
    state: Mutex<usize>,
    cv: Condvar,
}

impl FlightGate {
    pub fn new(max: usize) -> Arc<Self> {
        Arc::new(FlightGate {
            max: max.max(1),
            state: Mutex::new(0),
            cv: Condvar::new(),
        })
    }

    pub fn acquire(self: &Arc<Self>) -> FlightPermit {
        let mut count = self.state.lock().expect("gate lock");
        while *count >= self.max {
            count = self.cv.wait(count).expect("gate lock");
        }
        *count += 1;
        FlightPermit {
            gate: Arc::clone(self),
        }
    }

    pub fn in_flight(&self) -> usize {
        *self.state.lock().expect("gate lock")
    }
}

pub struct FlightPermit {
    gate: Arc<FlightGate>,
}

impl Drop for FlightPermit {
    fn drop(&mut self) {
        let mut count = self.gate.state.lock().expect("gate lock");
        *count -= 1;
        self.gate.cv.notify_one();
    }
}

fn transport(message: impl Into<String>, status: Option<u16>, retryable: bool) -> Error {
    Error::Transport {
        message: message.into(),
        status,
        retryable,
    }
}

/// POSTs `payload` as JSON and deserializes the JSON response, applying
/// the retry policy: connect/timeout errors and 5xx retry with backoff,
/// 4xx fail immediately.
fn post_json<Req: Serialize, Resp: for<'de> Deserialize<'de>>(
    client: &reqwest::blocking::Client,
    config: &EndpointConfig,
    payload: &Req,
) -> Result<Resp> {
    let mut last_err: Option<Error> = None;
    for attempt in 0..=config.max_retries {
        if attempt > 0 {
            std::thread::sleep(config.retry_backoff * 2u32.pow(attempt as u32 - 1));
        }
        let mut request = client.post(&config.url).json(payload);
        if let Some(key) = &config.api_key {
            request = request.bearer_auth(key);
        }
        match request.send() {
            Err(e) => {
                log::warn!("endpoint {} attempt {attempt}: {e}", config.url);
                last_err = Some(transport(
                    format!("request to {} failed: {e}", config.url),
                    None,
                    true,
                ));
            }
            Ok(resp) => {
                let status = resp.status();
                if status.is_success() {
                    return resp.json::<Resp>().map_err(|e| {
                        Error::Contract(format!(
                            "endpoint {} returned malformed JSON: {e}",
                            config.url
                        ))
                    });
                }
                let body = resp.text().unwrap_or_default();
                let snippet: String = body.chars().take(200).collect();
                let retryable = status.is_server_error();
                let err = transport(
                    format!("endpoint {} returned {status}: {snippet}", config.url),
                    Some(status.as_u16()),
                    retryable,
                );
                if !retryable {
                    return Err(err);
                }
                log::warn!("endpoint {} attempt {attempt}: status {status}", config.url);
                last_err = Some(err);
            }
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn build_client(config: &EndpointConfig) -> Result<reqwest::blocking::Client> {
    reqwest::blocking::Client::builder()
        .timeout(config.timeout)
        .build()
        .map_err(|e| transport(format!("building HTTP client: {e}"), None, false))
}

#[derive(Serialize)]
struct EmbedRequestBody<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponseBody {
    vectors: Vec<Vec<f64>>,
}

/// Embedder backed by an external HTTP endpoint. Vectors are
/// L2-normalized on receipt; the declared dimension is enforced.
pub struct EndpointEmbedder {
    config: EndpointConfig,
    dimension: usize,
    client: reqwest::blocking::Client,
    gate: Arc<FlightGate>,
}

impl EndpointEmbedder {
    pub fn new(config: EndpointConfig, dimension: usize) -> Result<Self> {
        let client = build_client(&config)?;
        let gate = FlightGate::new(config.max_in_flight);
        Ok(EndpointEmbedder {
            config,
            dimension,
            client,
            gate,
        })
    }

    fn normalize_received(&self, raw: Vec<f64>, position: usize) -> Result<EmbeddingVector> {
        let mut v = EmbeddingVector::new(raw);
        if v.dimension() != self.dimension {
            return Err(Error::Contract(format!(
                "endpoint vector {position} has dimension {} ≠ declared {}",
                v.dimension(),
                self.dimension
            )));
        }
        if !v.is_finite() {
            return Err(Error::Contract(format!(
                "endpoint vector {position} has non-finite entries"
            )));
        }
        if !v.is_zero() {
            let norm = v.l2_norm();
            for x in &mut v.values {
                *x /= norm;
            }
        }
        Ok(v)
    }
}

impl Embedder for EndpointEmbedder {
    fn contract(&self) -> EmbedderContract {
        EmbedderContract {
            name: format!("endpoint/{}#d{}", self.config.url, self.dimension),
            dimension: self.dimension,
            mode: EmbedderMode::ExternalEndpoint,
        }
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let vectors = self.embed_batch(std::slice::from_ref(&text.to_string()))?;
        Ok(vectors.into_iter().next().expect("one vector"))
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let _permit = self.gate.acquire();
        let body = EmbedRequestBody { texts };
        let resp: EmbedResponseBody = post_json(&self.client, &self.config, &body)?;
        if resp.vectors.len() != texts.len() {
            return Err(Error::Contract(format!(
                "endpoint returned {} vectors for {} texts",
                resp.vectors.len(),
                texts.len()
            )));
        }
        resp.vectors
            .into_iter()
            .enumerate()
            .map(|(i, raw)| self.normalize_received(raw, i))
            .collect()
    }
}

#[derive(Serialize)]
struct GenRequestBody<'a> {
    persona_label: &'a str,
    task: GenerationTask,
    input_text: &'a str,
    context: Vec<&'a str>,
    max_tokens: usize,
    temperature: f64,
    seed: u64,
}

#[derive(Deserialize)]
struct GenResponseBody {
    text: String,
}

/// Generation backend backed by an external HTTP endpoint. Answers are
/// truncated to the request budget; questions must come back ending in
/// `?`. Endpoint outputs are not reproducible in general — callers that
/// promise determinism must not use this backend.
pub struct EndpointBackend {
    config: EndpointConfig,
    client: reqwest::blocking::Client,
    gate: Arc<FlightGate>,
}

impl EndpointBackend {
    pub fn new(config: EndpointConfig) -> Result<Self> {
        let client = build_client(&config)?;
        let gate = FlightGate::new(config.max_in_flight);
        Ok(EndpointBackend {
            config,
            client,
            gate,
        })
    }

    fn call(&self, request: &GenerationRequest, context: Vec<&str>) -> Result<String> {
        let _permit = self.gate.acquire();
        let body = GenRequestBody {
            persona_label: &request.persona_label,
            task: request.task,
            input_text: &request.input_text,
            context,
            max_tokens: request.budget_tokens,
            temperature: request.temperature,
            seed: request.seed,
        };
        let resp: GenResponseBody = post_json(&self.client, &self.config, &body)?;
        Ok(resp.text)
    }

    fn backend_name(&self) -> String {
        format!("endpoint/{}", self.config.url)
    }
}

impl GenerationBackend for EndpointBackend {
    fn contract(&self) -> BackendContract {
        BackendContract {
            name: self.backend_name(),
            mode: BackendMode::ExternalEndpoint,
        }
    }

    fn generate_answer(&self, request: &GenerationRequest) -> Result<GeneratedText> {
        request.validate()?;
        if request.task != GenerationTask::Answer {
            return Err(Error::validation("generate_answer called with task=question"));
        }
        let context = request.retrieved.iter().map(|c| c.text.as_str()).collect();
        let raw = self.call(request, context)?;
        let text = truncate_to_tokens(raw.trim(), request.budget_tokens);
        if text.is_empty() {
            return Err(Error::Contract(format!(
                "endpoint {} returned an empty answer",
                self.config.url
            )));
        }
        Ok(GeneratedText {
            text,
            backend_name: self.backend_name(),
            request_digest: request.digest(),
        })
    }

    fn formulate_question(
        &self,
        request: &GenerationRequest,
        source_keywords: &[String],
        already_asked: &BTreeSet<String>,
    ) -> Result<Option<GeneratedText>> {
        if source_keywords.is_empty() {
            return Err(Error::validation("formulate_question: no source keywords"));
        }
        // questions carry the answer's keywords as context, not chunk texts
        let context = source_keywords.iter().map(|k| k.as_str()).collect();
        let raw = self.call(request, context)?;
        let text = raw.trim().to_string();
        if text.is_empty() || !text.ends_with('?') {
            return Err(Error::Contract(format!(
                "endpoint {} returned a question not ending in '?': {:?}",
                self.config.url,
                text.chars().take(80).collect::<String>()
            )));
        }
        if already_asked.contains(&text) {
            // The endpoint repeated itself; treat the chain as exhausted
            // rather than looping forever.
            log::warn!("endpoint repeated an already-asked question; ending chain");
            return Ok(None);
        }
        Ok(Some(GeneratedText {
            text,
            backend_name: self.backend_name(),
            request_digest: request.digest(),
        }))
    }
}
