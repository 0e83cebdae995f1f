//! Keyword extraction and two-level concept-network construction.
//!
//! Every answer turn of a transcript contributes one *concept* (the chunk
//! itself) and exactly five *keywords*. The network exists at two levels:
//!
//! - **keyword level**: five nodes per chunk, fully interconnected (a K5
//!   clique, 10 intra-chunk edges); equal keywords of different chunks are
//!   joined by lexical edges. Keyword node identity is `(chunk, keyword)` —
//!   equal keywords are linked, not merged, so chunk membership stays
//!   recoverable.
//! - **concept level**: one node per chunk; a lexical edge joins two chunks
//!   iff they share at least one keyword; a maieutic edge joins answer A to
//!   answer B when B replies to a machine question triggered by A (the
//!   question's turn index rides on the edge).
//!
//! Maieutic edges are concept-level by definition. At the keyword level
//! they surface as a single "lift" edge between the two chunks' rank-1
//! keywords, so keyword-level metrics can still observe the condition
//! toggle without inventing 25 keyword-pair edges.
//!
//! Short degenerate chunks are padded to five keywords with sentinel
//! keywords `_pad1`, `_pad2`, …; sentinels never participate in lexical
//! matching or question formulation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{filter_stopwords, tokenize};
use crate::dialogue::{Transcript, TurnKind};
use crate::error::{Error, Result};
use crate::stopwords::StopList;

/// Keywords per chunk (the K in each chunk's K5 clique).
pub const KEYWORDS_PER_CHUNK: usize = 5;
/// Intra-chunk edges per chunk: C(5,2).
pub const INTRA_EDGES_PER_CHUNK: usize = 10;
/// Prefix marking padding sentinels.
pub const PAD_PREFIX: &str = "_pad";

/// True for padding sentinels, which never match lexically.
pub fn is_pad_keyword(keyword: &str) -> bool {
    keyword.starts_with(PAD_PREFIX)
}

/// Extracts exactly five keywords: tokens ranked by (frequency descending,
/// first occurrence ascending) after stopword removal, padded with
/// `_pad1..` when fewer than five distinct candidates exist.
pub fn extract_keywords(text: &str, stoplist: &StopList) -> Result<Vec<String>> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(Error::validation(
            "extract_keywords: text has no tokens",
        ));
    }
    let candidates = filter_stopwords(&tokens, stoplist);
    let mut freq: BTreeMap<&str, (usize, usize)> = BTreeMap::new(); // token → (count, first index)
    for (i, t) in candidates.iter().enumerate() {
        let entry = freq.entry(t.as_str()).or_insert((0, i));
        entry.0 += 1;
    }
    let mut ranked: Vec<(&str, (usize, usize))> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
    let mut keywords: Vec<String> = ranked
        .into_iter()
        .take(KEYWORDS_PER_CHUNK)
        .map(|(t, _)| t.to_string())
        .collect();
    let mut pad = 1;
    while keywords.len() < KEYWORDS_PER_CHUNK {
        keywords.push(format!("{PAD_PREFIX}{pad}"));
        pad += 1;
    }
    Ok(keywords)
}

/// Which level of the network a graph is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Keyword,
    Concept,
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Level::Keyword => write!(f, "keyword"),
            Level::Concept => write!(f, "concept"),
        }
    }
}

/// Node identity. Concept nodes are keyed by the answer's turn index;
/// keyword nodes by (turn index, keyword string).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeId {
    Concept(usize),
    Keyword(usize, String),
}

impl NodeId {
    pub fn chunk_index(&self) -> usize {
        match self {
            NodeId::Concept(i) => *i,
            NodeId::Keyword(i, _) => *i,
        }
    }

    /// Stable textual id used in exports.
    pub fn export_id(&self) -> String {
        match self {
            NodeId::Concept(i) => format!("c{i}"),
            NodeId::Keyword(i, w) => format!("k{i}_{w}"),
        }
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NodeId::Concept(i) => write!(f, "concept {i}"),
            NodeId::Keyword(i, w) => write!(f, "keyword ({i}, {w})"),
        }
    }
}

/// Attributes attached to a node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeAttrs {
    pub agent_id: String,
    pub chunk_index: usize,
    /// The keyword string; keyword-level nodes only.
    pub keyword: Option<String>,
    /// The chunk's five keywords; concept-level nodes only.
    pub keywords: Option<Vec<String>>,
    /// Set on foreign endpoints pulled into an agent subgraph by a
    /// maieutic edge.
    pub boundary: bool,
}

/// Edge kind; parallel edges of different kinds between one node pair are
/// kept distinct (and collapse to one for degree counting).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeKind {
    IntraChunk,
    Lexical,
    Maieutic,
}

impl EdgeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeKind::IntraChunk => "intra-chunk",
            EdgeKind::Lexical => "lexical",
            EdgeKind::Maieutic => "maieutic",
        }
    }
}

/// Undirected edge, endpoints stored in canonical (sorted) order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    pub kind: EdgeKind,
    /// Turn index of the mediating machine question; maieutic edges only.
    pub mediating_question: Option<usize>,
}

impl Edge {
    pub fn new(a: NodeId, b: NodeId, kind: EdgeKind, mediating_question: Option<usize>) -> Edge {
        let (a, b) = if b < a { (b, a) } else { (a, b) };
        Edge {
            a,
            b,
            kind,
            mediating_question,
        }
    }

    pub fn touches(&self, id: &NodeId) -> bool {
        self.a == *id || self.b == *id
    }
}

/// One level of the network: nodes with attributes plus canonicalized,
/// deduplicated, sorted edges. Construction is open (`from_parts`) so
/// arbitrary graphs — e.g. random oracles in tests — get the same metric
/// machinery as built networks.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphView {
    pub level: Level,
    pub nodes: BTreeMap<NodeId, NodeAttrs>,
    pub edges: Vec<Edge>,
}

impl GraphView {
    pub fn empty(level: Level) -> GraphView {
        GraphView {
            level,
            nodes: BTreeMap::new(),
            edges: Vec::new(),
        }
    }

    /// Builds a view from parts: canonicalizes endpoint order, removes
    /// exact duplicate edges, sorts, and checks that every endpoint is a
    /// known node.
    pub fn from_parts(
        level: Level,
        nodes: BTreeMap<NodeId, NodeAttrs>,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<GraphView> {
        let mut canonical: BTreeSet<Edge> = BTreeSet::new();
        for e in edges {
            let e = Edge::new(e.a, e.b, e.kind, e.mediating_question);
            if !nodes.contains_key(&e.a) {
                return Err(Error::validation(format!("edge endpoint {} is not a node", e.a)));
            }
            if !nodes.contains_key(&e.b) {
                return Err(Error::validation(format!("edge endpoint {} is not a node", e.b)));
            }
            canonical.insert(e);
        }
        Ok(GraphView {
            level,
            nodes,
            edges: canonical.into_iter().collect(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Deduplicated undirected adjacency: self-loops dropped, parallel
    /// edges of different kinds collapsed. This is the adjacency degree
    /// counting and components run on.
    pub fn dedup_adjacency(&self) -> BTreeMap<&NodeId, BTreeSet<&NodeId>> {
        let mut adj: BTreeMap<&NodeId, BTreeSet<&NodeId>> = BTreeMap::new();
        for id in self.nodes.keys() {
            adj.insert(id, BTreeSet::new());
        }
        for e in &self.edges {
            if e.a == e.b {
                continue;
            }
            adj.get_mut(&e.a).expect("endpoint known").insert(&e.b);
            adj.get_mut(&e.b).expect("endpoint known").insert(&e.a);
        }
        adj
    }

    /// Subgraph induced on `keep`: those nodes plus edges with both
    /// endpoints kept.
    pub fn induced(&self, keep: &BTreeSet<NodeId>) -> GraphView {
        let nodes: BTreeMap<NodeId, NodeAttrs> = self
            .nodes
            .iter()
            .filter(|(id, _)| keep.contains(id))
            .map(|(id, a)| (id.clone(), a.clone()))
            .collect();
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| keep.contains(&e.a) && keep.contains(&e.b))
            .cloned()
            .collect();
        GraphView {
            level: self.level,
            nodes,
            edges,
        }
    }

    /// Same node set, maieutic edges removed (the analysis-level
    /// condition toggle).
    pub fn without_maieutic(&self) -> GraphView {
        GraphView {
            level: self.level,
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .filter(|e| e.kind != EdgeKind::Maieutic)
                .cloned()
                .collect(),
        }
    }

    /// Sorted chunk indices present in this view.
    pub fn chunk_indices(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.nodes.keys().map(|n| n.chunk_index()).collect();
        set.into_iter().collect()
    }
}

/// The two-level network extracted from one transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptNetwork {
    pub keyword_view: GraphView,
    pub concept_view: GraphView,
    /// Agent roster the source transcript declared (even agents with zero
    /// answer turns).
    pub agents: BTreeSet<String>,
    /// Set when this network is an agent subgraph.
    pub agent_filter: Option<String>,
    /// False when maieutic edges were stripped during filtering.
    pub include_maieutic: bool,
}

/// Builds the full two-level network from a transcript.
///
/// Keyword level: per chunk a K5 clique over `(chunk, keyword)` nodes plus
/// lexical edges between equal non-sentinel keywords of different chunks,
/// plus one maieutic lift edge between rank-1 keywords per maieutic event.
/// Concept level: lexical edge iff two chunks share ≥1 non-sentinel
/// keyword; maieutic edge per machine question answered.
pub fn build_network(transcript: &Transcript) -> Result<ConceptNetwork> {
    let mut kw_nodes: BTreeMap<NodeId, NodeAttrs> = BTreeMap::new();
    let mut kw_edges: Vec<Edge> = Vec::new();
    let mut c_nodes: BTreeMap<NodeId, NodeAttrs> = BTreeMap::new();
    let mut c_edges: Vec<Edge> = Vec::new();

    // chunk index → keyword list, in answer order
    let mut chunk_keywords: Vec<(usize, Vec<String>)> = Vec::new();
    for turn in transcript.turns.iter().filter(|t| t.kind == TurnKind::Answer) {
        let keywords = turn.keywords.as_ref().ok_or(Error::Turn {
            index: turn.index,
            message: "answer turn has no keywords".into(),
        })?;
        if keywords.len() != KEYWORDS_PER_CHUNK {
            return Err(Error::Turn {
                index: turn.index,
                message: format!("expected 5 keywords, found {}", keywords.len()),
            });
        }
        let chunk = turn.index;
        c_nodes.insert(
            NodeId::Concept(chunk),
            NodeAttrs {
                agent_id: turn.speaker.clone(),
                chunk_index: chunk,
                keyword: None,
                keywords: Some(keywords.clone()),
                boundary: false,
            },
        );
        for (i, w) in keywords.iter().enumerate() {
            kw_nodes.insert(
                NodeId::Keyword(chunk, w.clone()),
                NodeAttrs {
                    agent_id: turn.speaker.clone(),
                    chunk_index: chunk,
                    keyword: Some(w.clone()),
                    keywords: None,
                    boundary: false,
                },
            );
            for w2 in &keywords[i + 1..] {
                kw_edges.push(Edge::new(
                    NodeId::Keyword(chunk, w.clone()),
                    NodeId::Keyword(chunk, w2.clone()),
                    EdgeKind::IntraChunk,
                    None,
                ));
            }
        }
        chunk_keywords.push((chunk, keywords.clone()));
    }

    // Lexical edges: all chunk pairs sharing non-sentinel keywords.
    for (i, (chunk_a, kws_a)) in chunk_keywords.iter().enumerate() {
        let set_a: BTreeSet<&str> = kws_a
            .iter()
            .map(|s| s.as_str())
            .filter(|w| !is_pad_keyword(w))
            .collect();
        for (chunk_b, kws_b) in &chunk_keywords[i + 1..] {
            let mut shared_any = false;
            for w in kws_b.iter().filter(|w| !is_pad_keyword(w)) {
                if set_a.contains(w.as_str()) {
                    shared_any = true;
                    kw_edges.push(Edge::new(
                        NodeId::Keyword(*chunk_a, w.clone()),
                        NodeId::Keyword(*chunk_b, w.clone()),
                        EdgeKind::Lexical,
                        None,
                    ));
                }
            }
            if shared_any {
                c_edges.push(Edge::new(
                    NodeId::Concept(*chunk_a),
                    NodeId::Concept(*chunk_b),
                    EdgeKind::Lexical,
                    None,
                ));
            }
        }
    }

    // Maieutic edges: question turn q (triggered by answer A) answered by B.
    let keywords_of = |chunk: usize| -> &Vec<String> {
        chunk_keywords
            .iter()
            .find(|(c, _)| *c == chunk)
            .map(|(_, k)| k)
            .expect("answer chunk recorded")
    };
    for turn in &transcript.turns {
        if turn.kind != TurnKind::MachineQuestion {
            continue;
        }
        let Some(a_index) = turn.triggered_by else {
            return Err(Error::Turn {
                index: turn.index,
                message: "machine-question has no triggered_by".into(),
            });
        };
        let Some(b_turn) = transcript
            .turns
            .iter()
            .find(|t| t.kind == TurnKind::Answer && t.triggered_by == Some(turn.index))
        else {
            continue; // unanswered question (aborted debate): no edge
        };
        c_edges.push(Edge::new(
            NodeId::Concept(a_index),
            NodeId::Concept(b_turn.index),
            EdgeKind::Maieutic,
            Some(turn.index),
        ));
        // keyword-level lift between rank-1 keywords, if both are real
        let top_a = &keywords_of(a_index)[0];
        let top_b = &keywords_of(b_turn.index)[0];
        if !is_pad_keyword(top_a) && !is_pad_keyword(top_b) {
            kw_edges.push(Edge::new(
                NodeId::Keyword(a_index, top_a.clone()),
                NodeId::Keyword(b_turn.index, top_b.clone()),
                EdgeKind::Maieutic,
                Some(turn.index),
            ));
        }
    }

    Ok(ConceptNetwork {
        keyword_view: GraphView::from_parts(Level::Keyword, kw_nodes, kw_edges)?,
        concept_view: GraphView::from_parts(Level::Concept, c_nodes, c_edges)?,
        agents: transcript
            .agents
            .iter()
            .map(|a| a.agent_id.clone())
            .collect(),
        agent_filter: None,
        include_maieutic: true,
    })
}

/// Restricts a network to one agent's nodes. With `include_maieutic`,
/// maieutic edges incident to the agent's concepts are kept and their
/// foreign endpoints appear as boundary nodes; without it, only
/// intra-chunk and lexical edges among the agent's own chunks survive.
pub fn agent_subgraph(
    network: &ConceptNetwork,
    agent_id: &str,
    include_maieutic: bool,
) -> Result<ConceptNetwork> {
    if !network.agents.contains(agent_id) {
        return Err(Error::validation(format!(
            "unknown agent {agent_id:?} (roster: {:?})",
            network.agents
        )));
    }
    let filter_view = |view: &GraphView| -> GraphView {
        let own: BTreeSet<NodeId> = view
            .nodes
            .iter()
            .filter(|(_, a)| a.agent_id == agent_id)
            .map(|(id, _)| id.clone())
            .collect();
        let mut sub = view.induced(&own);
        if include_maieutic {
            for e in &view.edges {
                if e.kind != EdgeKind::Maieutic {
                    continue;
                }
                let (inside, outside) = match (own.contains(&e.a), own.contains(&e.b)) {
                    (true, false) => (&e.a, &e.b),
                    (false, true) => (&e.b, &e.a),
                    _ => continue, // fully inside (already kept) or fully outside
                };
                let _ = inside;
                let mut attrs = view.nodes[outside].clone();
                attrs.boundary = true;
                sub.nodes.insert(outside.clone(), attrs);
                sub.edges.push(e.clone());
            }
            sub.edges.sort();
            sub.edges.dedup();
        } else {
            sub.edges.retain(|e| e.kind != EdgeKind::Maieutic);
        }
        sub
    };
    Ok(ConceptNetwork {
        keyword_view: filter_view(&network.keyword_view),
        concept_view: filter_view(&network.concept_view),
        agents: network.agents.clone(),
        agent_filter: Some(agent_id.to_string()),
        include_maieutic,
    })
}

/// Connected components over the deduplicated adjacency. Components are
/// each sorted by node id and ordered by their smallest node id.
pub fn connected_components(view: &GraphView) -> Vec<Vec<NodeId>> {
    let adj = view.dedup_adjacency();
    let mut seen: BTreeSet<&NodeId> = BTreeSet::new();
    let mut components = Vec::new();
    for start in view.nodes.keys() {
        if seen.contains(start) {
            continue;
        }
        let mut component = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            component.insert(id.clone());
            for next in &adj[id] {
                if !seen.contains(next) {
                    stack.push(next);
                }
            }
        }
        components.push(component.into_iter().collect::<Vec<_>>());
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::Condition;
    use crate::testutil::{synthetic_transcript, AnswerSpec};

    // The four keyword sets exercised throughout: three linked through a
    // shared keyword, one fully isolated, one reachable only maieutically.
    pub(crate) const SET_BOOK: [&str; 5] = ["book", "read", "gospel", "fact", "possibility"];
    pub(crate) const SET_PRINCIPLE: [&str; 5] =
        ["principle", "hostility", "amount", "friendship", "fact"];
    pub(crate) const SET_PHILOSOPHY: [&str; 5] = ["philosophy", "fact", "sit", "thing", "people"];
    pub(crate) const SET_MASTER: [&str; 5] = ["master", "morality", "reality", "mean", "modernity"];
    pub(crate) const SET_QUESTION: [&str; 5] = ["question", "need", "anything", "thing", "sure"];

    fn stoplist() -> StopList {
        StopList::default_english()
    }

    #[test]
    fn extract_five_distinct_in_occurrence_order() {
        let kws = extract_keywords("gospel virtue prince battle custom", &stoplist()).unwrap();
        assert_eq!(kws, vec!["gospel", "virtue", "prince", "battle", "custom"]);
    }

    #[test]
    fn extract_ranks_by_frequency_then_occurrence_then_pads() {
        let kws = extract_keywords("war peace war law war peace", &stoplist()).unwrap();
        assert_eq!(kws, vec!["war", "peace", "law", "_pad1", "_pad2"]);
    }

    #[test]
    fn extract_rejects_empty_text() {
        assert!(extract_keywords("", &stoplist()).is_err());
        assert!(extract_keywords("  —  ", &stoplist()).is_err());
    }

    #[test]
    fn extract_ignores_stopwords_but_counts_real_tokens() {
        let kws = extract_keywords(
            "the gospel of the gospel and the reading of facts",
            &stoplist(),
        )
        .unwrap();
        assert_eq!(kws[0], "gospel");
        assert!(!kws.contains(&"the".to_string()));
        assert!(!kws.contains(&"of".to_string()));
    }

    /// The three-chunk fixture joined through the shared keyword "fact".
    fn fact_fixture() -> (Transcript, Vec<usize>) {
        synthetic_transcript(
            Condition::QuestionOff,
            &[
                AnswerSpec::plain("nietzsche", SET_BOOK),
                AnswerSpec::plain("nietzsche", SET_PRINCIPLE),
                AnswerSpec::plain("nietzsche", SET_PHILOSOPHY),
            ],
        )
    }

    #[test]
    fn lexical_edges_from_shared_fact() {
        let (t, idx) = fact_fixture();
        let net = build_network(&t).unwrap();
        let expected: BTreeSet<(usize, usize)> = [
            (idx[0], idx[1]),
            (idx[0], idx[2]),
            (idx[1], idx[2]),
        ]
        .into_iter()
        .collect();
        let got: BTreeSet<(usize, usize)> = net
            .concept_view
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Lexical)
            .map(|e| (e.a.chunk_index(), e.b.chunk_index()))
            .collect();
        assert_eq!(got, expected);
        // the keyword-level bridges are the three "fact" nodes
        let fact_links: Vec<&Edge> = net
            .keyword_view
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Lexical)
            .collect();
        assert_eq!(fact_links.len(), 3);
        for e in fact_links {
            for endpoint in [&e.a, &e.b] {
                match endpoint {
                    NodeId::Keyword(_, w) => assert_eq!(w, "fact"),
                    other => panic!("unexpected endpoint {other}"),
                }
            }
        }
    }

    #[test]
    fn disjoint_chunk_is_an_isolated_clique() {
        let (t, idx) = synthetic_transcript(
            Condition::QuestionOff,
            &[
                AnswerSpec::plain("nietzsche", SET_BOOK),
                AnswerSpec::plain("nietzsche", SET_MASTER),
            ],
        );
        let net = build_network(&t).unwrap();
        assert!(net
            .concept_view
            .edges
            .iter()
            .all(|e| e.kind != EdgeKind::Lexical));
        let comps = connected_components(&net.keyword_view);
        assert_eq!(comps.len(), 2);
        for comp in comps {
            assert_eq!(comp.len(), 5);
            let chunk = comp[0].chunk_index();
            assert!(comp.iter().all(|n| n.chunk_index() == chunk));
        }
        let _ = idx;
    }

    #[test]
    fn maieutic_event_links_otherwise_disjoint_chunks() {
        let (t, idx) = synthetic_transcript(
            Condition::Maieutic,
            &[
                AnswerSpec::plain("nietzsche", SET_BOOK),
                AnswerSpec::asked_by("aristotle", SET_QUESTION, 0),
            ],
        );
        let net = build_network(&t).unwrap();
        let lexical: Vec<&Edge> = net
            .concept_view
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Lexical)
            .collect();
        assert!(lexical.is_empty(), "no keyword overlap between the chunks");
        let maieutic: Vec<&Edge> = net
            .concept_view
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Maieutic)
            .collect();
        assert_eq!(maieutic.len(), 1);
        let e = maieutic[0];
        assert_eq!(e.a, NodeId::Concept(idx[0]));
        assert_eq!(e.b, NodeId::Concept(idx[1]));
        // the mediating question sits between the two answers
        let q = e.mediating_question.unwrap();
        assert!(idx[0] < q && q < idx[1]);
        assert_eq!(t.turns[q].kind, TurnKind::MachineQuestion);
        // keyword-level lift joins the rank-1 keywords
        let lift: Vec<&Edge> = net
            .keyword_view
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Maieutic)
            .collect();
        assert_eq!(lift.len(), 1);
        assert_eq!(lift[0].a, NodeId::Keyword(idx[0], "book".into()));
        assert_eq!(lift[0].b, NodeId::Keyword(idx[1], "question".into()));
    }

    #[test]
    fn every_chunk_contributes_a_full_k5() {
        let (t, _) = fact_fixture();
        let net = build_network(&t).unwrap();
        assert_eq!(net.keyword_view.node_count(), 15);
        let intra = net
            .keyword_view
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::IntraChunk)
            .count();
        assert_eq!(intra, 3 * INTRA_EDGES_PER_CHUNK);
        for chunk in net.concept_view.chunk_indices() {
            let clique_nodes = net
                .keyword_view
                .nodes
                .keys()
                .filter(|n| n.chunk_index() == chunk)
                .count();
            assert_eq!(clique_nodes, KEYWORDS_PER_CHUNK);
            let clique_edges = net
                .keyword_view
                .edges
                .iter()
                .filter(|e| {
                    e.kind == EdgeKind::IntraChunk
                        && e.a.chunk_index() == chunk
                        && e.b.chunk_index() == chunk
                })
                .count();
            assert_eq!(clique_edges, INTRA_EDGES_PER_CHUNK);
        }
    }

    #[test]
    fn pad_sentinels_never_match_lexically() {
        let (t, _) = synthetic_transcript(
            Condition::QuestionOff,
            &[
                AnswerSpec::plain("a", ["war", "law", "code", "_pad1", "_pad2"]),
                AnswerSpec::plain("b", ["axiom", "order", "rule", "_pad1", "_pad2"]),
            ],
        );
        let net = build_network(&t).unwrap();
        assert_eq!(
            net.keyword_view
                .edges
                .iter()
                .filter(|e| e.kind == EdgeKind::Lexical)
                .count(),
            0
        );
        assert_eq!(
            net.concept_view
                .edges
                .iter()
                .filter(|e| e.kind == EdgeKind::Lexical)
                .count(),
            0
        );
    }

    #[test]
    fn fact_fixture_keyword_view_is_one_component() {
        let (t, _) = fact_fixture();
        let net = build_network(&t).unwrap();
        // union-find oracle over the same edge list
        let ids: Vec<&NodeId> = net.keyword_view.nodes.keys().collect();
        let mut parent: Vec<usize> = (0..ids.len()).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let root = find(parent, parent[i]);
                parent[i] = root;
            }
            parent[i]
        }
        for e in &net.keyword_view.edges {
            let ia = ids.iter().position(|n| **n == e.a).unwrap();
            let ib = ids.iter().position(|n| **n == e.b).unwrap();
            let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
            parent[ra] = rb;
        }
        let roots: BTreeSet<usize> = (0..ids.len()).map(|i| find(&mut parent, i)).collect();
        assert_eq!(roots.len(), 1);

        let comps = connected_components(&net.keyword_view);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), 15);
    }

    #[test]
    fn components_of_empty_graph() {
        let empty = GraphView::empty(Level::Concept);
        assert!(connected_components(&empty).is_empty());
    }

    #[test]
    fn agent_subgraph_filters_and_flags_boundaries() {
        let (t, idx) = synthetic_transcript(
            Condition::Maieutic,
            &[
                AnswerSpec::plain("nietzsche", SET_BOOK),
                AnswerSpec::asked_by("aristotle", SET_QUESTION, 0),
            ],
        );
        let net = build_network(&t).unwrap();

        let without = agent_subgraph(&net, "nietzsche", false).unwrap();
        assert_eq!(without.concept_view.node_count(), 1);
        assert!(without
            .concept_view
            .edges
            .iter()
            .all(|e| e.kind != EdgeKind::Maieutic));
        assert_eq!(without.keyword_view.node_count(), 5);
        assert_eq!(without.agent_filter.as_deref(), Some("nietzsche"));

        let with = agent_subgraph(&net, "nietzsche", true).unwrap();
        assert_eq!(with.concept_view.node_count(), 2);
        let foreign = &with.concept_view.nodes[&NodeId::Concept(idx[1])];
        assert!(foreign.boundary);
        assert_eq!(foreign.agent_id, "aristotle");
        assert_eq!(
            with.concept_view
                .edges
                .iter()
                .filter(|e| e.kind == EdgeKind::Maieutic)
                .count(),
            1
        );
        // own nodes are not boundary
        assert!(!with.concept_view.nodes[&NodeId::Concept(idx[0])].boundary);
    }

    #[test]
    fn agent_with_zero_answers_yields_empty_graph() {
        let (mut t, _) = fact_fixture();
        t.agents.push(crate::dialogue::RosterEntry {
            agent_id: "silent".into(),
            display_label: "AI-clone of Silent".into(),
            color: "gray".into(),
        });
        let net = build_network(&t).unwrap();
        let sub = agent_subgraph(&net, "silent", true).unwrap();
        assert_eq!(sub.concept_view.node_count(), 0);
        assert_eq!(sub.keyword_view.node_count(), 0);
    }

    #[test]
    fn unknown_agent_is_an_error() {
        let (t, _) = fact_fixture();
        let net = build_network(&t).unwrap();
        assert!(agent_subgraph(&net, "socrates", true).is_err());
    }

    #[test]
    fn missing_keywords_is_a_turn_error() {
        let (mut t, idx) = fact_fixture();
        t.turns[idx[1]].keywords = None;
        match build_network(&t) {
            Err(Error::Turn { index, .. }) => assert_eq!(index, idx[1]),
            other => panic!("expected turn error, got {other:?}"),
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn keyword_set_strategy() -> impl Strategy<Value = [&'static str; 5]> {
            // pool of 12 keywords; each chunk draws 5 distinct ones
            static POOL: [&str; 12] = [
                "war", "peace", "law", "virtue", "state", "power", "habit", "soul", "fact",
                "order", "fate", "form",
            ];
            proptest::sample::subsequence(POOL.to_vec(), 5)
                .prop_map(|v| [v[0], v[1], v[2], v[3], v[4]])
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn concept_lexical_adjacency_equals_set_intersection_oracle(
                sets in proptest::collection::vec(keyword_set_strategy(), 1..8),
            ) {
                let specs: Vec<AnswerSpec> = sets
                    .iter()
                    .map(|s| AnswerSpec::plain("solo", *s))
                    .collect();
                let (t, idx) = synthetic_transcript(Condition::QuestionOff, &specs);
                let net = build_network(&t).unwrap();
                for (i, set_i) in sets.iter().enumerate() {
                    for (j, set_j) in sets.iter().enumerate().skip(i + 1) {
                        let a: BTreeSet<&str> = set_i.iter().copied().collect();
                        let b: BTreeSet<&str> = set_j.iter().copied().collect();
                        let expect = a.intersection(&b).next().is_some();
                        let edge = Edge::new(
                            NodeId::Concept(idx[i]),
                            NodeId::Concept(idx[j]),
                            EdgeKind::Lexical,
                            None,
                        );
                        prop_assert_eq!(net.concept_view.edges.contains(&edge), expect);
                    }
                }
                // K5 invariant at every size
                prop_assert_eq!(net.keyword_view.node_count(), 5 * sets.len());
                let intra = net
                    .keyword_view
                    .edges
                    .iter()
                    .filter(|e| e.kind == EdgeKind::IntraChunk)
                    .count();
                prop_assert_eq!(intra, INTRA_EDGES_PER_CHUNK * sets.len());
            }

            #[test]
            fn dropping_maieutic_edges_is_node_preserving(
                sets in proptest::collection::vec(keyword_set_strategy(), 2..6),
            ) {
                let mut specs = vec![AnswerSpec::plain("a", sets[0])];
                for (i, s) in sets.iter().enumerate().skip(1) {
                    // alternate speakers; every other answer is maieutic
                    let agent = if i % 2 == 0 { "a" } else { "b" };
                    if i % 2 == 1 {
                        specs.push(AnswerSpec::asked_by(agent, *s, i - 1));
                    } else {
                        specs.push(AnswerSpec::plain(agent, *s));
                    }
                }
                let (t, _) = synthetic_transcript(Condition::Maieutic, &specs);
                let net = build_network(&t).unwrap();
                for view in [&net.keyword_view, &net.concept_view] {
                    let stripped = view.without_maieutic();
                    prop_assert_eq!(stripped.node_count(), view.node_count());
                    prop_assert!(stripped.edges.iter().all(|e| e.kind != EdgeKind::Maieutic));
                    prop_assert!(stripped.edge_count() <= view.edge_count());
                }
            }
        }
    }
}
