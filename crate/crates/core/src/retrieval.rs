//! Chunk/query embedding, top-k retrieval scoring, and exact maximum
//! inner product search (MIPS).
//!
//! The retrieval probability of a chunk given a query is
//! `p(z|x) ∝ exp(⟨d(z), q(x)⟩)`, normalized over the selected top-k
//! scores only. MIPS is exact brute force: corpora here are desk-scale,
//! and exactness is what makes the oracle tests possible.
//!
//! The default embedder is a hashed TF-IDF ("deterministic-lexical")
//! embedder: each token is hashed (seeded FNV-1a, 64-bit) into one of `D`
//! buckets, weighted by inverse document frequency over the fitted chunk
//! set, and the bucket vector is L2-normalized. It needs no network and no
//! model weights, produces non-negative entries (so cosine similarities
//! land in [0,1]), and is bit-reproducible across runs and platforms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Corpus};
use crate::error::{Error, Result};

/// Default bucket count for the lexical embedder.
pub const DEFAULT_DIMENSION: usize = 256;
/// Default hash seed for the lexical embedder (an arbitrary fixed
/// constant; changing it changes every golden artifact).
pub const DEFAULT_HASH_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

/// A dense embedding of fixed dimension. Entries must be finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        EmbeddingVector { values }
    }

    pub fn zeros(dimension: usize) -> Self {
        EmbeddingVector {
            values: vec![0.0; dimension],
        }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// True when every entry is exactly zero (degenerate embedding of
    /// token-free text; deliberately left unnormalized).
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Cosine similarity; 0.0 when either vector is all-zero.
    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        if self.is_zero() || other.is_zero() {
            return 0.0;
        }
        self.dot(other) / (self.l2_norm() * other.l2_norm())
    }

    fn normalize(&mut self) {
        let norm = self.l2_norm();
        if norm > 0.0 {
            for v in &mut self.values {
                *v /= norm;
            }
        }
    }
}

/// How an embedder produces vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedderMode {
    /// Hashed TF-IDF; reproducible across runs with no network.
    DeterministicLexical,
    /// Vectors come from a configured HTTP endpoint.
    ExternalEndpoint,
}

/// Identifies an embedder for provenance: any index or transcript records
/// the contract it was built under.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedderContract {
    /// Backend name including every parameter that affects output
    /// (dimension, hash seed, IDF fit size for the lexical embedder).
    pub name: String,
    pub dimension: usize,
    pub mode: EmbedderMode,
}

/// Anything that maps text to fixed-dimension vectors.
pub trait Embedder {
    fn contract(&self) -> EmbedderContract;

    fn embed(&self, text: &str) -> Result<EmbeddingVector>;

    /// Batch form; backends with per-request overhead override this.
    /// Results are in input order.
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// Seeded FNV-1a 64-bit hash. Hand-rolled so hash values (and therefore
/// every persisted vector) are stable across Rust releases and platforms.
fn fnv1a64(seed: u64, bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for b in seed.to_le_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// The deterministic-lexical embedder: seeded hashed TF-IDF.
///
/// An unfitted embedder ([`LexicalEmbedder::new`]) uses IDF = 1 for every
/// token, i.e. plain hashed term counts. [`LexicalEmbedder::fit`] computes
/// smoothed IDF over a chunk set: `idf(t) = ln((1 + N) / (1 + df(t))) + 1`
/// where `df` counts chunks containing the token; unseen query tokens get
/// the df = 0 value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalEmbedder {
    dimension: usize,
    hash_seed: u64,
    /// Token → IDF weight; empty when unfitted.
    idf: BTreeMap<String, f64>,
    /// Number of chunks the IDF table was fitted on; 0 when unfitted.
    fitted_chunks: usize,
}

impl LexicalEmbedder {
    /// Unfitted embedder: hashed term counts, IDF = 1 everywhere.
    pub fn new(dimension: usize, hash_seed: u64) -> Self {
        LexicalEmbedder {
            dimension,
            hash_seed,
            idf: BTreeMap::new(),
            fitted_chunks: 0,
        }
    }

    pub fn with_defaults() -> Self {
        Self::new(DEFAULT_DIMENSION, DEFAULT_HASH_SEED)
    }

    /// Fits IDF weights on the token lists of the given chunks.
    pub fn fit<'a, I>(dimension: usize, hash_seed: u64, chunk_tokens: I) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut n = 0usize;
        for tokens in chunk_tokens {
            n += 1;
            let mut seen = std::collections::BTreeSet::new();
            for t in tokens {
                if seen.insert(t.as_str()) {
                    *df.entry(t.clone()).or_insert(0) += 1;
                }
            }
        }
        let idf = df
            .into_iter()
            .map(|(t, d)| (t, Self::idf_value(n, d)))
            .collect();
        LexicalEmbedder {
            dimension,
            hash_seed,
            idf,
            fitted_chunks: n,
        }
    }

    /// Convenience: fit on a segmented corpus.
    pub fn fit_corpus(corpus: &Corpus, dimension: usize, hash_seed: u64) -> Self {
        Self::fit(
            dimension,
            hash_seed,
            corpus.chunks.iter().map(|c| c.tokens.as_slice()),
        )
    }

    fn idf_value(n_chunks: usize, df: usize) -> f64 {
        (((1 + n_chunks) as f64) / ((1 + df) as f64)).ln() + 1.0
    }

    fn idf_of(&self, token: &str) -> f64 {
        if self.fitted_chunks == 0 {
            return 1.0;
        }
        self.idf
            .get(token)
            .copied()
            .unwrap_or_else(|| Self::idf_value(self.fitted_chunks, 0))
    }

    /// Bucket index a token hashes to.
    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a64(self.hash_seed, token.as_bytes()) % self.dimension as u64) as usize
    }
}

impl Embedder for LexicalEmbedder {
    fn contract(&self) -> EmbedderContract {
        EmbedderContract {
            name: format!(
                "lexical-tfidf-fnv1a64/d{}/seed{:#018x}/fit{}",
                self.dimension, self.hash_seed, self.fitted_chunks
            ),
            dimension: self.dimension,
            mode: EmbedderMode::DeterministicLexical,
        }
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let tokens = tokenize(text);
        let mut vector = EmbeddingVector::zeros(self.dimension);
        if tokens.is_empty() {
            return Ok(vector); // degenerate zero vector, not normalized
        }
        let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
        for t in &tokens {
            *tf.entry(t.as_str()).or_insert(0) += 1;
        }
        for (token, count) in tf {
            let weight = count as f64 * self.idf_of(token);
            vector.values[self.bucket(token)] += weight;
        }
        vector.normalize();
        Ok(vector)
    }
}

/// Per-philosopher index: one embedding per chunk, in chunk order,
/// plus the contract of the embedder that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalIndex {
    pub philosopher_id: String,
    pub entries: Vec<(String, EmbeddingVector)>,
    pub embedder: EmbedderContract,
}

impl RetrievalIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One retrieved chunk with its raw inner product and its softmax
/// probability within the selected top-k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredChunk {
    pub chunk_id: String,
    pub raw_score: f64,
    pub probability: f64,
}

/// Result of [`score_distribution`]: the selected chunks, highest
/// probability first, plus metadata recording whether `k` exceeded the
/// index size and was clamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSelection {
    pub requested_k: usize,
    pub effective_k: usize,
    pub chunks: Vec<ScoredChunk>,
}

impl ScoredSelection {
    /// True when the index held fewer than `requested_k` entries.
    pub fn clamped(&self) -> bool {
        self.effective_k < self.requested_k
    }
}

fn check_dimension(index: &RetrievalIndex, probe: &EmbeddingVector) -> Result<()> {
    if probe.dimension() != index.embedder.dimension {
        return Err(Error::Contract(format!(
            "query dimension {} does not match index dimension {}",
            probe.dimension(),
            index.embedder.dimension
        )));
    }
    if !probe.is_finite() {
        return Err(Error::Contract("query vector has non-finite entries".into()));
    }
    Ok(())
}

/// Scores every index entry against `query` by inner product, keeps the
/// `k` largest (ties broken by lexicographically smaller chunk_id), and
/// softmax-normalizes the selected scores. If `k` exceeds the index size,
/// all entries are returned and the selection is marked clamped.
pub fn score_distribution(
    index: &RetrievalIndex,
    query: &EmbeddingVector,
    k: usize,
) -> Result<ScoredSelection> {
    if k == 0 {
        return Err(Error::validation("score_distribution: k must be ≥ 1"));
    }
    if index.is_empty() {
        return Err(Error::validation(format!(
            "score_distribution: index for {:?} is empty",
            index.philosopher_id
        )));
    }
    check_dimension(index, query)?;

    let mut scored: Vec<(&str, f64)> = index
        .entries
        .iter()
        .map(|(id, v)| (id.as_str(), v.dot(query)))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite scores")
            .then_with(|| a.0.cmp(b.0))
    });
    let effective_k = k.min(scored.len());
    scored.truncate(effective_k);

    // Softmax with max subtraction for numerical stability.
    let max_score = scored
        .iter()
        .map(|(_, s)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scored.iter().map(|(_, s)| (s - max_score).exp()).collect();
    let total: f64 = weights.iter().sum();
    let chunks = scored
        .iter()
        .zip(&weights)
        .map(|((id, raw), w)| ScoredChunk {
            chunk_id: (*id).to_string(),
            raw_score: *raw,
            probability: w / total,
        })
        .collect();
    Ok(ScoredSelection {
        requested_k: k,
        effective_k,
        chunks,
    })
}

/// Exact maximum inner product search: returns the `(chunk_id, score)`
/// maximizing `⟨entry, probe⟩`, ties broken by lexicographically smaller
/// chunk_id.
pub fn mips_max(index: &RetrievalIndex, probe: &EmbeddingVector) -> Result<(String, f64)> {
    if index.is_empty() {
        return Err(Error::validation(format!(
            "mips_max: index for {:?} is empty",
            index.philosopher_id
        )));
    }
    check_dimension(index, probe)?;
    let mut best: Option<(&str, f64)> = None;
    for (id, v) in &index.entries {
        let score = v.dot(probe);
        let better = match best {
            None => true,
            Some((bid, bscore)) => score > bscore || (score == bscore && id.as_str() < bid),
        };
        if better {
            best = Some((id.as_str(), score));
        }
    }
    let (id, score) = best.expect("non-empty index");
    Ok((id.to_string(), score))
}

/// Embeds every chunk of a segmented corpus. Aborts on the first chunk
/// whose embedding fails, naming that chunk.
pub fn build_index(corpus: &Corpus, embedder: &dyn Embedder) -> Result<RetrievalIndex> {
    if corpus.chunks.is_empty() {
        return Err(Error::validation(format!(
            "build_index: corpus for {:?} has no chunks (segment it first)",
            corpus.philosopher_id
        )));
    }
    let contract = embedder.contract();
    let texts: Vec<String> = corpus.chunks.iter().map(|c| c.text.clone()).collect();
    let vectors = embedder.embed_batch(&texts).map_err(|e| {
        e.with_context(format!(
            "embedding chunks of {:?} (first chunk {})",
            corpus.philosopher_id, corpus.chunks[0].chunk_id
        ))
    })?;
    if vectors.len() != corpus.chunks.len() {
        return Err(Error::Contract(format!(
            "embedder returned {} vectors for {} chunks",
            vectors.len(),
            corpus.chunks.len()
        )));
    }
    let mut entries = Vec::with_capacity(vectors.len());
    for (chunk, vector) in corpus.chunks.iter().zip(vectors) {
        if vector.dimension() != contract.dimension {
            return Err(Error::Contract(format!(
                "chunk {}: embedding dimension {} ≠ declared {}",
                chunk.chunk_id,
                vector.dimension(),
                contract.dimension
            )));
        }
        if !vector.is_finite() {
            return Err(Error::Contract(format!(
                "chunk {}: embedding has non-finite entries",
                chunk.chunk_id
            )));
        }
        entries.push((chunk.chunk_id.clone(), vector));
    }
    Ok(RetrievalIndex {
        philosopher_id: corpus.philosopher_id.clone(),
        entries,
        embedder: contract,
    })
}
