//! Autonomous multi-agent debates over per-philosopher text corpora, plus
//! the graph analytics run on their transcripts.
//!
//! The pipeline has three stages:
//!
//! 1. **Ingest** ([`corpus`], [`retrieval`]): load a philosopher's source
//!    texts from a manifest, segment them into token-bounded chunks, and
//!    build a dense retrieval index over the chunks.
//! 2. **Debate** ([`generation`], [`dialogue`]): run a seeded debate loop in
//!    which agents answer questions from chunks retrieved out of their own
//!    corpora, speakers are selected by maximum-inner-product confidence,
//!    and (in the maieutic condition) agents formulate follow-up questions
//!    routed to other agents. The output is a fully reproducible transcript.
//! 3. **Analyze** ([`conceptnet`], [`metrics`], [`io`]): extract five
//!    keywords per answer, build the two-level concept network (keyword
//!    cliques + lexical and maieutic links), and compute degree-centrality
//!    reports, centrality-vs-index curves, component censuses, maieutic
//!    condition deltas, and embedding-based local coherence.
//!
//! Everything is deterministic by default: the bundled lexical embedder and
//! extractive generation backend require no network access and reproduce
//! transcripts byte-for-byte from (config, seed).

pub mod conceptnet;
pub mod corpus;
pub mod dialogue;
pub mod endpoint;
pub mod error;
pub mod generation;
pub mod io;
pub mod metrics;
pub mod retrieval;
pub mod stopwords;

pub use error::{Error, Result};

/// Tool version embedded into every persisted artifact for provenance.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Schema version written to (and required from) transcript and bundle files.
pub const SCHEMA_VERSION: &str = "1";
