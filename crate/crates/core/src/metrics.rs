//! Graph and text metrics over concept networks and transcripts.
//!
//! The headline statistic is average degree centrality
//! `c_d = (1/n) Σ_v deg(v)/(n−1)`, computed on the deduplicated simple
//! graph (self-loops dropped, parallel edge kinds collapsed). A graph
//! with at most one node has `c_d = 0` by convention.
//!
//! Everything here is a pure function of a [`GraphView`] or a
//! [`Transcript`], so the same machinery serves built networks, agent
//! subgraphs, and hand-assembled oracle graphs alike.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::conceptnet::{
    build_network, connected_components, ConceptNetwork, GraphView, Level, KEYWORDS_PER_CHUNK,
};
use crate::dialogue::Transcript;
use crate::error::{Error, Result};
use crate::retrieval::Embedder;

/// Summary statistics for one graph view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityReport {
    pub level: Level,
    pub include_maieutic: bool,
    pub node_count: usize,
    pub edge_count: usize,
    /// Average degree centrality on the deduplicated simple graph.
    pub c_d: f64,
    /// Raw mean degree, for reading alongside the normalized value.
    pub mean_degree: f64,
    pub isolates: usize,
}

/// Average degree centrality of a view: mean over nodes of
/// `deg(v)/(n−1)`. Zero when the view has fewer than two nodes.
pub fn average_degree_centrality(view: &GraphView) -> f64 {
    let n = view.node_count();
    if n <= 1 {
        return 0.0;
    }
    let adj = view.dedup_adjacency();
    let mut sum = 0.0;
    // iterate in node order so the summation order is fixed
    for id in view.nodes.keys() {
        sum += adj[id].len() as f64 / (n - 1) as f64;
    }
    sum / n as f64
}

/// Number of isolated units in a view.
///
/// Concept level: single-node components (chunks connected to nothing).
/// Keyword level: components that are exactly one chunk's five-node
/// clique — a chunk whose keywords reach no other chunk.
pub fn isolate_count(view: &GraphView) -> usize {
    let components = connected_components(view);
    match view.level {
        Level::Concept => components.iter().filter(|c| c.len() == 1).count(),
        Level::Keyword => components
            .iter()
            .filter(|c| {
                c.len() == KEYWORDS_PER_CHUNK
                    && c.iter().all(|n| n.chunk_index() == c[0].chunk_index())
            })
            .count(),
    }
}

/// Computes the full report for a view, stripping maieutic edges first
/// when `include_maieutic` is false.
pub fn centrality_report(view: &GraphView, include_maieutic: bool) -> CentralityReport {
    let owned;
    let effective = if include_maieutic {
        view
    } else {
        owned = view.without_maieutic();
        &owned
    };
    let n = effective.node_count();
    let adj = effective.dedup_adjacency();
    let degree_sum: usize = adj.values().map(|s| s.len()).sum();
    CentralityReport {
        level: effective.level,
        include_maieutic,
        node_count: n,
        edge_count: effective.edge_count(),
        c_d: average_degree_centrality(effective),
        mean_degree: if n == 0 {
            0.0
        } else {
            degree_sum as f64 / n as f64
        },
        isolates: isolate_count(effective),
    }
}

/// One point of a growth curve: the network restricted to the first `k`
/// answer chunks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub node_count: usize,
    pub c_d: f64,
    pub isolates: usize,
}

/// Centrality as a function of debate length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityCurve {
    pub level: Level,
    pub include_maieutic: bool,
    pub points: Vec<CurvePoint>,
}

/// Computes `c_d` over growing prefixes of the debate: point `k` is the
/// network induced on the first `k` answer chunks (in turn order). The
/// induced prefix equals a network rebuilt from the truncated transcript,
/// because every edge rule is local to the chunks involved.
pub fn centrality_curve(
    network: &ConceptNetwork,
    level: Level,
    include_maieutic: bool,
) -> CentralityCurve {
    let view = match level {
        Level::Keyword => &network.keyword_view,
        Level::Concept => &network.concept_view,
    };
    let base = if include_maieutic {
        view.clone()
    } else {
        view.without_maieutic()
    };
    let chunks = base.chunk_indices();
    let mut points = Vec::with_capacity(chunks.len());
    for k in 1..=chunks.len() {
        let keep: BTreeSet<crate::conceptnet::NodeId> = base
            .nodes
            .keys()
            .filter(|n| chunks[..k].contains(&n.chunk_index()))
            .cloned()
            .collect();
        let prefix = base.induced(&keep);
        points.push(CurvePoint {
            k,
            node_count: prefix.node_count(),
            c_d: average_degree_centrality(&prefix),
            isolates: isolate_count(&prefix),
        });
    }
    CentralityCurve {
        level,
        include_maieutic,
        points,
    }
}

/// Centrality gained by the maieutic edges: `c_d(with) − c_d(without)`
/// on the same node set. Non-negative by construction, since removing
/// edges can only lower degrees.
pub fn condition_delta(view: &GraphView) -> f64 {
    average_degree_centrality(view) - average_degree_centrality(&view.without_maieutic())
}

/// Local coherence of a transcript's answers under an embedder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    /// Adjacent answer pairs scored (answers − 1).
    pub pair_count: usize,
    /// Mean cosine similarity over those pairs.
    pub mean_cosine: f64,
    /// Pairs where at least one embedding was the zero vector; such
    /// pairs score 0.
    pub degenerate_pairs: usize,
}

/// Mean cosine similarity between consecutive answers. Requires at
/// least two answers; a pair containing a zero embedding contributes 0
/// and is counted in `degenerate_pairs`.
pub fn local_coherence(
    transcript: &Transcript,
    embedder: &dyn Embedder,
) -> Result<CoherenceReport> {
    let answers: Vec<&str> = transcript.answers().map(|t| t.text.as_str()).collect();
    if answers.len() < 2 {
        return Err(Error::validation(format!(
            "local coherence needs at least 2 answers, transcript has {}",
            answers.len()
        )));
    }
    let embeddings = answers
        .iter()
        .map(|text| embedder.embed(text))
        .collect::<Result<Vec<_>>>()?;
    let mut sum = 0.0;
    let mut degenerate = 0;
    for pair in embeddings.windows(2) {
        if pair[0].is_zero() || pair[1].is_zero() {
            degenerate += 1;
            continue; // contributes 0
        }
        sum += pair[0].cosine(&pair[1]);
    }
    let pair_count = embeddings.len() - 1;
    Ok(CoherenceReport {
        pair_count,
        mean_cosine: sum / pair_count as f64,
        degenerate_pairs: degenerate,
    })
}

/// Convenience: build the network and report both levels, with and
/// without maieutic edges.
pub fn full_report(transcript: &Transcript) -> Result<Vec<CentralityReport>> {
    let network = build_network(transcript)?;
    let mut reports = Vec::with_capacity(4);
    for level in [Level::Keyword, Level::Concept] {
        let view = match level {
            Level::Keyword => &network.keyword_view,
            Level::Concept => &network.concept_view,
        };
        for include in [true, false] {
            reports.push(centrality_report(view, include));
        }
    }
    Ok(reports)
}
