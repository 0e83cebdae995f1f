//! Utterance generation: answers conditioned on retrieved chunks and
//! machine-formulated questions, behind a pluggable backend contract.
//!
//! The default backend is extractive and fully deterministic: it
//! concatenates sentences from the retrieved chunks — chunks in descending
//! retrieval probability, sentences in source order — until the token
//! budget is reached. Identical requests produce byte-identical text, which
//! is what makes golden-transcript testing possible. An HTTP adapter for
//! external generators lives in [`crate::endpoint`].

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{tokenize, truncate_to_tokens};
use crate::error::{Error, Result};

/// Minimum allowed answer budget, in tokens.
pub const MIN_BUDGET_TOKENS: usize = 16;

/// What the backend is asked to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenerationTask {
    Answer,
    Question,
}

/// A retrieved chunk shipped to the generator: id, retrieval probability,
/// and the chunk text itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextChunk {
    pub chunk_id: String,
    pub probability: f64,
    pub text: String,
}

/// Everything a backend needs to produce one utterance. The request is
/// the unit of provenance: its digest is recorded on the generated text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    /// e.g. "AI-clone of Nietzsche"; external backends receive it as the
    /// persona to impersonate, and it labels provenance either way.
    pub persona_label: String,
    pub task: GenerationTask,
    /// The question (or forwarded answer) being responded to.
    pub input_text: String,
    /// Retrieved context, highest probability first. Non-empty for
    /// task = answer.
    pub retrieved: Vec<ContextChunk>,
    pub budget_tokens: usize,
    pub seed: u64,
    /// Ignored by the extractive backend (documented); honored by the
    /// endpoint adapter.
    pub temperature: f64,
}

impl GenerationRequest {
    pub fn validate(&self) -> Result<()> {
        if self.budget_tokens < MIN_BUDGET_TOKENS {
            return Err(Error::validation(format!(
                "budget_tokens {} below minimum {MIN_BUDGET_TOKENS}",
                self.budget_tokens
            )));
        }
        if self.task == GenerationTask::Answer && self.retrieved.is_empty() {
            return Err(Error::validation(
                "answer request carries no retrieved chunks",
            ));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(Error::validation(format!(
                "temperature {} must be finite and ≥ 0",
                self.temperature
            )));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of the request, hex-encoded.
    /// Recomputable by anyone holding the request.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("request serializes");
        let mut hasher = Sha256::new();
        hasher.update(&json);
        hex_encode(&hasher.finalize())
    }
}

pub(crate) fn hex_encode(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// A generated utterance plus the provenance needed to re-attribute it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedText {
    pub text: String,
    pub backend_name: String,
    pub request_digest: String,
}

impl GeneratedText {
    /// True when this text was produced for exactly `request`.
    pub fn attributed_to(&self, request: &GenerationRequest) -> bool {
        self.request_digest == request.digest()
    }
}

/// How a backend produces text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendMode {
    ExtractiveDeterministic,
    ExternalEndpoint,
}

/// Identifies a generation backend for provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendContract {
    pub name: String,
    pub mode: BackendMode,
}

/// Anything that turns generation requests into text.
pub trait GenerationBackend {
    fn contract(&self) -> BackendContract;

    /// Produces an answer; `request.task` must be `Answer`.
    fn generate_answer(&self, request: &GenerationRequest) -> Result<GeneratedText>;

    /// Produces the next machine question following an answer, or `None`
    /// when every candidate question has been asked already (the maieutic
    /// chain ends). `request.task` must be `Question`; `source_keywords`
    /// are the answer's keywords, highest-ranked first.
    fn formulate_question(
        &self,
        request: &GenerationRequest,
        source_keywords: &[String],
        already_asked: &BTreeSet<String>,
    ) -> Result<Option<GeneratedText>>;
}

/// Splits text into sentences: a sentence ends at a run of `.`, `!`, `?`
/// (the run is kept); text without terminal punctuation is one sentence.
/// Sentences are trimmed; empty ones are dropped.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut in_terminator = false;
    for c in text.chars() {
        let is_term = matches!(c, '.' | '!' | '?');
        if in_terminator && !is_term {
            let s = current.trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
            current.clear();
        }
        current.push(c);
        in_terminator = is_term;
    }
    let s = current.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    out
}

/// The extractive question rule: `"What do you think of {w}?"` for the
/// highest-ranked keyword whose question has not been asked yet. Sentinel
/// keywords (prefix `_pad`) are never asked about. Returns `None` when all
/// candidates are exhausted.
pub fn formulate_question(
    source_keywords: &[String],
    already_asked: &BTreeSet<String>,
    _seed: u64,
) -> Option<String> {
    source_keywords
        .iter()
        .filter(|w| !w.starts_with("_pad"))
        .map(|w| format!("What do you think of {w}?"))
        .find(|q| !already_asked.contains(q))
}

/// The deterministic extractive backend.
#[derive(Debug, Clone, Default)]
pub struct ExtractiveBackend;

impl ExtractiveBackend {
    pub fn new() -> Self {
        ExtractiveBackend
    }
}

pub const EXTRACTIVE_BACKEND_NAME: &str = "extractive-v1";

impl GenerationBackend for ExtractiveBackend {
    fn contract(&self) -> BackendContract {
        BackendContract {
            name: EXTRACTIVE_BACKEND_NAME.into(),
            mode: BackendMode::ExtractiveDeterministic,
        }
    }

    /// Greedy sentence concatenation: chunks in descending probability
    /// (ties keep the request's order), sentences in source order; stop at
    /// the first sentence that would push the total past `budget_tokens`.
    /// If even the first sentence exceeds the budget it is truncated to
    /// the budget, so answers are never empty.
    fn generate_answer(&self, request: &GenerationRequest) -> Result<GeneratedText> {
        request.validate()?;
        if request.task != GenerationTask::Answer {
            return Err(Error::validation("generate_answer called with task=question"));
        }
        let mut order: Vec<&ContextChunk> = request.retrieved.iter().collect();
        order.sort_by(|a, b| b.probability.partial_cmp(&a.probability).expect("finite"));

        let mut picked: Vec<String> = Vec::new();
        let mut used_tokens = 0usize;
        'outer: for chunk in order {
            for sentence in split_sentences(&chunk.text) {
                let cost = tokenize(&sentence).len();
                if used_tokens + cost > request.budget_tokens {
                    if picked.is_empty() {
                        picked.push(truncate_to_tokens(&sentence, request.budget_tokens));
                    }
                    break 'outer;
                }
                used_tokens += cost;
                picked.push(sentence);
            }
        }
        if picked.is_empty() {
            return Err(Error::Contract(
                "extractive backend: all retrieved chunks are empty".into(),
            ));
        }
        Ok(GeneratedText {
            text: picked.join(" "),
            backend_name: EXTRACTIVE_BACKEND_NAME.into(),
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
        Ok(
            formulate_question(source_keywords, already_asked, request.seed).map(|text| {
                GeneratedText {
                    text,
                    backend_name: EXTRACTIVE_BACKEND_NAME.into(),
                    request_digest: request.digest(),
                }
            }),
        )
    }
}
