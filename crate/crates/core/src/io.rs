//! Persistence and export: atomic file writes, transcript and agent-bundle
//! round trips, GraphML/DOT graph exports, and analysis reports.
//!
//! All writers go through [`atomic_write`] (write to a temporary file in
//! the destination directory, then rename), so a crash never leaves a
//! half-written artifact behind. All readers validate what they parsed
//! before handing it back; a file produced by a newer schema fails with
//! [`Error::UnsupportedVersion`] rather than being misread.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, BytesText, Event};
use quick_xml::Writer as XmlWriter;
use serde::{Deserialize, Serialize};

use crate::conceptnet::{build_network, EdgeKind, GraphView, Level, NodeId};
use crate::corpus::{tokenize, Corpus};
use crate::dialogue::{Agent, AgentProfile, Condition, Transcript};
use crate::error::{Error, Result};
use crate::metrics::{
    centrality_curve, centrality_report, condition_delta, local_coherence, CentralityCurve,
    CentralityReport, CoherenceReport,
};
use crate::retrieval::{
    Embedder, LexicalEmbedder, RetrievalIndex, DEFAULT_DIMENSION, DEFAULT_HASH_SEED,
};
use crate::{SCHEMA_VERSION, TOOL_VERSION};

/// Color given to nodes whose agent has no entry in the color map.
pub const FALLBACK_COLOR: &str = "gray";

/// Writes `bytes` to `path` atomically: the data lands in a temporary
/// file in the same directory and is renamed into place, so readers see
/// either the old content or the new, never a prefix.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".epistemo-tmp-")
        .tempfile_in(parent)
        .map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Pretty JSON with a trailing newline — the on-disk shape of every JSON
/// artifact, so files diff cleanly and byte-compare across runs.
fn pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::internal(format!("serialize: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Validates and writes a transcript.
pub fn write_transcript(path: &Path, transcript: &Transcript) -> Result<()> {
    transcript.validate()?;
    atomic_write(path, &pretty_json(transcript)?)
}

/// Reads and validates a transcript. Unknown fields or enum values fail
/// as parse errors naming the file; a foreign `schema_version` fails as
/// [`Error::UnsupportedVersion`].
pub fn read_transcript(path: &Path) -> Result<Transcript> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let transcript: Transcript = serde_json::from_str(&text)
        .map_err(|e| Error::parse(format!("{}: {e}", path.display())))?;
    transcript.validate()?;
    Ok(transcript)
}

/// Segmentation parameters recorded in (and digested into) every bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub chunk_tokens: usize,
    pub overlap_tokens: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            chunk_tokens: crate::corpus::DEFAULT_CHUNK_TOKENS,
            overlap_tokens: crate::corpus::DEFAULT_OVERLAP_TOKENS,
        }
    }
}

/// Everything needed to reconstitute one debate participant: profile,
/// segmented corpus, retrieval index, and the fitted embedder that
/// produced the index. Stored as `<agent_id>.agent.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentBundle {
    pub schema_version: String,
    pub tool_version: String,
    /// Digest of the ingest configuration (id, segmentation, embedder
    /// contract), for provenance and tamper evidence.
    pub config_digest: String,
    pub chunk_tokens: usize,
    pub overlap_tokens: usize,
    pub profile: AgentProfile,
    pub corpus: Corpus,
    pub index: RetrievalIndex,
    pub embedder: LexicalEmbedder,
}

impl AgentBundle {
    /// Assembles and validates a bundle.
    pub fn assemble(
        profile: AgentProfile,
        corpus: Corpus,
        index: RetrievalIndex,
        embedder: LexicalEmbedder,
        ingest: IngestOptions,
    ) -> Result<AgentBundle> {
        let config_digest =
            Self::ingest_digest(&corpus.philosopher_id, ingest, &embedder)?;
        let bundle = AgentBundle {
            schema_version: SCHEMA_VERSION.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            config_digest,
            chunk_tokens: ingest.chunk_tokens,
            overlap_tokens: ingest.overlap_tokens,
            profile,
            corpus,
            index,
            embedder,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    fn ingest_digest(
        philosopher_id: &str,
        ingest: IngestOptions,
        embedder: &LexicalEmbedder,
    ) -> Result<String> {
        use sha2::{Digest, Sha256};
        #[derive(Serialize)]
        struct Stamp<'a> {
            philosopher_id: &'a str,
            ingest: IngestOptions,
            embedder: crate::retrieval::EmbedderContract,
        }
        let bytes = serde_json::to_vec(&Stamp {
            philosopher_id,
            ingest,
            embedder: embedder.contract(),
        })
        .map_err(|e| Error::internal(format!("digest ingest config: {e}")))?;
        Ok(crate::generation::hex_encode(&Sha256::digest(&bytes)))
    }

    /// Checks internal consistency: ids agree, the index covers exactly
    /// the corpus chunks in order, the index really was built by the
    /// bundled embedder, and the recorded digest matches the recorded
    /// configuration.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::UnsupportedVersion {
                found: self.schema_version.clone(),
                supported: SCHEMA_VERSION.to_string(),
            });
        }
        let expected = Self::ingest_digest(
            &self.corpus.philosopher_id,
            IngestOptions {
                chunk_tokens: self.chunk_tokens,
                overlap_tokens: self.overlap_tokens,
            },
            &self.embedder,
        )?;
        if self.config_digest != expected {
            return Err(Error::validation(format!(
                "bundle {:?}: config digest mismatch (recorded {}, recomputed {})",
                self.profile.agent_id, self.config_digest, expected
            )));
        }
        self.profile.validate()?;
        let id = &self.profile.agent_id;
        if self.corpus.philosopher_id != *id {
            return Err(Error::validation(format!(
                "bundle {id:?} carries corpus of {:?}",
                self.corpus.philosopher_id
            )));
        }
        if self.index.philosopher_id != *id {
            return Err(Error::validation(format!(
                "bundle {id:?} carries index of {:?}",
                self.index.philosopher_id
            )));
        }
        if self.index.len() != self.corpus.chunks.len() {
            return Err(Error::validation(format!(
                "bundle {id:?}: index has {} entries for {} chunks",
                self.index.len(),
                self.corpus.chunks.len()
            )));
        }
        for ((entry_id, vector), chunk) in self.index.entries.iter().zip(&self.corpus.chunks) {
            if *entry_id != chunk.chunk_id {
                return Err(Error::validation(format!(
                    "bundle {id:?}: index entry {entry_id:?} out of order with chunk {:?}",
                    chunk.chunk_id
                )));
            }
            if vector.dimension() != self.embedder.contract().dimension {
                return Err(Error::validation(format!(
                    "bundle {id:?}: entry {entry_id:?} has dimension {}, embedder {}",
                    vector.dimension(),
                    self.embedder.contract().dimension
                )));
            }
        }
        if self.index.embedder != self.embedder.contract() {
            return Err(Error::validation(format!(
                "bundle {id:?}: index built by {:?} but bundle carries {:?}",
                self.index.embedder.name,
                self.embedder.contract().name
            )));
        }
        Ok(())
    }

    /// Turns the bundle into a live debate participant.
    pub fn into_agent(self) -> Result<Agent> {
        Agent::new(
            self.profile,
            self.corpus,
            self.index,
            Arc::new(self.embedder),
        )
    }
}

/// Canonical file name for an agent's bundle.
pub fn bundle_filename(agent_id: &str) -> String {
    format!("{agent_id}.agent.json")
}

/// Writes a bundle into `dir` under its canonical name; returns the path.
pub fn write_agent_bundle(dir: &Path, bundle: &AgentBundle) -> Result<PathBuf> {
    bundle.validate()?;
    let path = dir.join(bundle_filename(&bundle.profile.agent_id));
    atomic_write(&path, &pretty_json(bundle)?)?;
    Ok(path)
}

/// Reads and validates an agent bundle.
pub fn read_agent_bundle(path: &Path) -> Result<AgentBundle> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bundle: AgentBundle = serde_json::from_str(&text)
        .map_err(|e| Error::parse(format!("{}: {e}", path.display())))?;
    bundle.validate()?;
    Ok(bundle)
}

/// Provenance stamp embedded into rendered exports as a comment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_digest: String,
}

impl Provenance {
    /// Provenance of the run that produced a transcript.
    pub fn of(transcript: &Transcript) -> Provenance {
        Provenance {
            tool_version: transcript.tool_version.clone(),
            config_digest: transcript.config_digest.clone(),
        }
    }

    fn stamp(&self) -> String {
        format!(
            "epistemo tool_version={} config_digest={}",
            self.tool_version, self.config_digest
        )
    }
}

/// Rendering options for graph exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportOptions {
    /// agent_id → fill color. Agents not listed render in
    /// [`FALLBACK_COLOR`] and produce a warning.
    pub color_map: BTreeMap<String, String>,
    /// When set, a provenance comment is embedded in the output.
    pub provenance: Option<Provenance>,
}

impl Default for ExportOptions {
    fn default() -> Self {
        let mut color_map = BTreeMap::new();
        for (agent, color) in [
            ("aristotle", "blue"),
            ("nietzsche", "red"),
            ("machiavelli", "green"),
            ("sun-tzu", "yellow"),
        ] {
            color_map.insert(agent.to_string(), color.to_string());
        }
        ExportOptions {
            color_map,
            provenance: None,
        }
    }
}

/// A rendered export plus any warnings accumulated while rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportedGraph {
    pub content: String,
    /// One entry per agent that fell back to the neutral color.
    pub warnings: Vec<String>,
}

fn node_colors<'a>(
    view: &'a GraphView,
    options: &'a ExportOptions,
) -> (BTreeMap<&'a NodeId, &'a str>, Vec<String>) {
    let mut colors = BTreeMap::new();
    let mut missing: BTreeSet<&str> = BTreeSet::new();
    for (id, attrs) in &view.nodes {
        match options.color_map.get(&attrs.agent_id) {
            Some(color) => {
                colors.insert(id, color.as_str());
            }
            None => {
                missing.insert(attrs.agent_id.as_str());
                colors.insert(id, FALLBACK_COLOR);
            }
        }
    }
    let warnings = missing
        .into_iter()
        .map(|agent| format!("agent {agent:?} has no color mapping; using {FALLBACK_COLOR}"))
        .collect();
    (colors, warnings)
}

fn xml_event(writer: &mut XmlWriter<Vec<u8>>, event: Event<'_>) -> Result<()> {
    writer
        .write_event(event)
        .map_err(|e| Error::internal(format!("graphml write: {e}")))
}

fn xml_data(writer: &mut XmlWriter<Vec<u8>>, key: &str, value: &str) -> Result<()> {
    let mut el = BytesStart::new("data");
    el.push_attribute(("key", key));
    xml_event(writer, Event::Start(el))?;
    xml_event(writer, Event::Text(BytesText::new(value)))?;
    xml_event(writer, Event::End(BytesEnd::new("data")))
}

/// Renders one graph view as GraphML. Node data: agent_id, chunk_index,
/// keyword (keyword level only), color, boundary. Edge data: kind, and
/// mediating_question on maieutic edges. Node and edge order is fixed,
/// so equal graphs render byte-identically.
pub fn to_graphml(view: &GraphView, options: &ExportOptions) -> Result<ExportedGraph> {
    let (colors, warnings) = node_colors(view, options);
    let mut writer = XmlWriter::new_with_indent(Vec::new(), b' ', 2);
    xml_event(
        &mut writer,
        Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)),
    )?;
    if let Some(provenance) = &options.provenance {
        xml_event(
            &mut writer,
            Event::Comment(BytesText::new(&format!(" {} ", provenance.stamp()))),
        )?;
    }
    let mut graphml = BytesStart::new("graphml");
    graphml.push_attribute(("xmlns", "http://graphml.graphdrawing.org/xmlns"));
    xml_event(&mut writer, Event::Start(graphml))?;

    let keys: [(&str, &str, &str, &str); 7] = [
        ("d_agent", "node", "agent_id", "string"),
        ("d_chunk", "node", "chunk_index", "int"),
        ("d_keyword", "node", "keyword", "string"),
        ("d_color", "node", "color", "string"),
        ("d_boundary", "node", "boundary", "boolean"),
        ("d_kind", "edge", "kind", "string"),
        ("d_question", "edge", "mediating_question", "int"),
    ];
    for (id, target, name, ty) in keys {
        let mut key = BytesStart::new("key");
        key.push_attribute(("id", id));
        key.push_attribute(("for", target));
        key.push_attribute(("attr.name", name));
        key.push_attribute(("attr.type", ty));
        xml_event(&mut writer, Event::Empty(key))?;
    }

    let mut graph = BytesStart::new("graph");
    let graph_id = format!("epistemo-{}", view.level);
    graph.push_attribute(("id", graph_id.as_str()));
    graph.push_attribute(("edgedefault", "undirected"));
    xml_event(&mut writer, Event::Start(graph))?;

    for (id, attrs) in &view.nodes {
        let mut node = BytesStart::new("node");
        let node_id = id.export_id();
        node.push_attribute(("id", node_id.as_str()));
        xml_event(&mut writer, Event::Start(node))?;
        xml_data(&mut writer, "d_agent", &attrs.agent_id)?;
        xml_data(&mut writer, "d_chunk", &attrs.chunk_index.to_string())?;
        if let Some(keyword) = &attrs.keyword {
            xml_data(&mut writer, "d_keyword", keyword)?;
        }
        xml_data(&mut writer, "d_color", colors[id])?;
        xml_data(&mut writer, "d_boundary", if attrs.boundary { "true" } else { "false" })?;
        xml_event(&mut writer, Event::End(BytesEnd::new("node")))?;
    }

    for (i, edge) in view.edges.iter().enumerate() {
        let mut el = BytesStart::new("edge");
        let edge_id = format!("e{i}");
        let source = edge.a.export_id();
        let target = edge.b.export_id();
        el.push_attribute(("id", edge_id.as_str()));
        el.push_attribute(("source", source.as_str()));
        el.push_attribute(("target", target.as_str()));
        xml_event(&mut writer, Event::Start(el))?;
        xml_data(&mut writer, "d_kind", edge.kind.as_str())?;
        if let Some(q) = edge.mediating_question {
            xml_data(&mut writer, "d_question", &q.to_string())?;
        }
        xml_event(&mut writer, Event::End(BytesEnd::new("edge")))?;
    }

    xml_event(&mut writer, Event::End(BytesEnd::new("graph")))?;
    xml_event(&mut writer, Event::End(BytesEnd::new("graphml")))?;
    let mut content = String::from_utf8(writer.into_inner())
        .map_err(|e| Error::internal(format!("graphml utf8: {e}")))?;
    content.push('\n');
    Ok(ExportedGraph { content, warnings })
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders one graph view in DOT. Nodes are filled with their agent's
/// color; boundary nodes are double-bordered. Maieutic edges are red and
/// bold, lexical edges dashed, intra-chunk edges plain; every edge
/// carries its kind as an attribute.
pub fn to_dot(view: &GraphView, options: &ExportOptions) -> ExportedGraph {
    let (colors, warnings) = node_colors(view, options);
    let mut out = String::new();
    if let Some(provenance) = &options.provenance {
        out.push_str(&format!("// {}\n", provenance.stamp()));
    }
    out.push_str(&format!("graph \"epistemo-{}\" {{\n", view.level));
    out.push_str("  graph [overlap=false];\n");
    out.push_str("  node [style=filled];\n");
    for (id, attrs) in &view.nodes {
        let label = match &attrs.keyword {
            Some(keyword) => keyword.clone(),
            None => format!("{}#{}", attrs.agent_id, attrs.chunk_index),
        };
        let boundary = if attrs.boundary { ", peripheries=2" } else { "" };
        out.push_str(&format!(
            "  \"{}\" [label=\"{}\", fillcolor=\"{}\"{}];\n",
            dot_escape(&id.export_id()),
            dot_escape(&label),
            dot_escape(colors[id]),
            boundary
        ));
    }
    for edge in &view.edges {
        let style = match edge.kind {
            EdgeKind::Maieutic => ", color=\"red\", style=\"bold\"",
            EdgeKind::Lexical => ", style=\"dashed\"",
            EdgeKind::IntraChunk => "",
        };
        out.push_str(&format!(
            "  \"{}\" -- \"{}\" [kind=\"{}\"{}];\n",
            dot_escape(&edge.a.export_id()),
            dot_escape(&edge.b.export_id()),
            edge.kind.as_str(),
            style
        ));
    }
    out.push_str("}\n");
    ExportedGraph {
        content: out,
        warnings,
    }
}

/// Renders growth curves as CSV with a fixed header:
/// `level,include_maieutic,k,n,c_d,isolates`.
pub fn curves_to_csv(curves: &[CentralityCurve]) -> String {
    let mut out = String::from("level,include_maieutic,k,n,c_d,isolates\n");
    for curve in curves {
        for point in &curve.points {
            out.push_str(&format!(
                "{},{},{},{},{:.6},{}\n",
                curve.level,
                curve.include_maieutic,
                point.k,
                point.node_count,
                point.c_d,
                point.isolates
            ));
        }
    }
    out
}

/// Full analysis of one transcript: centrality reports and growth curves
/// for both levels with and without maieutic edges, the per-level
/// condition delta, and local coherence when the debate has at least two
/// answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: String,
    pub tool_version: String,
    pub config_digest: String,
    pub condition: Condition,
    pub seed: u64,
    pub reports: Vec<CentralityReport>,
    pub curves: Vec<CentralityCurve>,
    /// level name → c_d(with maieutic) − c_d(without).
    pub condition_delta: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence: Option<CoherenceReport>,
}

/// Computes the full analysis report for a transcript. Coherence is
/// measured with a lexical embedder fitted on the transcript's own
/// answers, so the report is a pure function of the transcript.
pub fn analyze_transcript(transcript: &Transcript) -> Result<AnalysisReport> {
    transcript.validate()?;
    let network = build_network(transcript)?;
    let mut reports = Vec::with_capacity(4);
    let mut curves = Vec::with_capacity(4);
    let mut deltas = BTreeMap::new();
    for level in [Level::Keyword, Level::Concept] {
        let view = match level {
            Level::Keyword => &network.keyword_view,
            Level::Concept => &network.concept_view,
        };
        for include in [true, false] {
            reports.push(centrality_report(view, include));
            curves.push(centrality_curve(&network, level, include));
        }
        deltas.insert(level.to_string(), condition_delta(view));
    }
    let coherence = if transcript.answers().count() >= 2 {
        let token_lists: Vec<Vec<String>> =
            transcript.answers().map(|t| tokenize(&t.text)).collect();
        let embedder = LexicalEmbedder::fit(
            DEFAULT_DIMENSION,
            DEFAULT_HASH_SEED,
            token_lists.iter().map(|v| v.as_slice()),
        );
        Some(local_coherence(transcript, &embedder)?)
    } else {
        None
    };
    Ok(AnalysisReport {
        schema_version: SCHEMA_VERSION.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        config_digest: transcript.config_digest.clone(),
        condition: transcript.condition.clone(),
        seed: transcript.seed,
        reports,
        curves,
        condition_delta: deltas,
        coherence,
    })
}

/// Writes an analysis report as pretty JSON.
pub fn write_analysis_report(path: &Path, report: &AnalysisReport) -> Result<()> {
    atomic_write(path, &pretty_json(report)?)
}

/// Writes any rendered text artifact (CSV, DOT, GraphML) atomically.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    atomic_write(path, content.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::dialogue::Condition;
    use crate::retrieval::build_index;
    use crate::testutil::{synthetic_transcript, AnswerSpec};

    const SET_BOOK: [&str; 5] = ["book", "read", "gospel", "fact", "possibility"];
    const SET_QUESTION: [&str; 5] = ["question", "need", "anything", "thing", "sure"];

    fn maieutic_fixture() -> Transcript {
        synthetic_transcript(
            Condition::Maieutic,
            &[
                AnswerSpec::plain("nietzsche", SET_BOOK),
                AnswerSpec::asked_by("aristotle", SET_QUESTION, 0),
            ],
        )
        .0
    }

    fn sample_bundle() -> AgentBundle {
        let text = "Virtue is a settled habit of choice, lying in a mean relative to us. \
                    The brave man fears the right things for the right reason, and the \
                    habit of courage is formed by acting as the courageous act. Practical \
                    wisdom judges the mean in each situation, and friendship completes a \
                    life that contemplation crowns with the highest satisfaction of all.";
        let mut corpus = Corpus {
            philosopher_id: "aristotle".into(),
            documents: vec![Document {
                doc_id: "ethics".into(),
                philosopher_id: "aristotle".into(),
                title: "On Habit".into(),
                text: text.into(),
            }],
            chunks: Vec::new(),
        };
        corpus.segment_all(16, 0).unwrap();
        assert!(corpus.chunks.len() >= 3);
        let embedder = LexicalEmbedder::fit_corpus(&corpus, 64, DEFAULT_HASH_SEED);
        let index = build_index(&corpus, &embedder).unwrap();
        let profile = AgentProfile {
            agent_id: "aristotle".into(),
            display_label: "AI-clone of Aristotle".into(),
            corpus_ref: "aristotle.agent.json".into(),
            index_ref: "aristotle.agent.json".into(),
            color: "blue".into(),
        };
        AgentBundle::assemble(
            profile,
            corpus,
            index,
            embedder,
            IngestOptions {
                chunk_tokens: 16,
                overlap_tokens: 0,
            },
        )
        .unwrap()
    }

    #[test]
    fn atomic_write_creates_overwrites_and_leaves_no_debris() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("artifact.txt");
        atomic_write(&path, b"first").unwrap();
        atomic_write(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(entries.len(), 1, "no temp files left behind");
    }

    #[test]
    fn transcript_round_trip_is_identity_and_byte_stable() {
        let transcript = maieutic_fixture();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        write_transcript(&a, &transcript).unwrap();
        write_transcript(&b, &transcript).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let bytes = std::fs::read(&a).unwrap();
        assert_eq!(bytes.last(), Some(&b'\n'));
        let back = read_transcript(&a).unwrap();
        assert_eq!(back, transcript);
    }

    #[test]
    fn read_rejects_foreign_schema_version() {
        let transcript = maieutic_fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        write_transcript(&path, &transcript).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"schema_version\": \"1\"", "\"schema_version\": \"999\"");
        std::fs::write(&path, text).unwrap();
        match read_transcript(&path) {
            Err(Error::UnsupportedVersion { found, .. }) => assert_eq!(found, "999"),
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn read_rejects_tampered_turn_kind_naming_the_file() {
        let transcript = maieutic_fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        write_transcript(&path, &transcript).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"kind\": \"machine-question\"", "\"kind\": \"monologue\"");
        std::fs::write(&path, text).unwrap();
        match read_transcript(&path) {
            Err(Error::Parse(message)) => assert!(message.contains("t.json"), "{message}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_error_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("absent.json");
        match read_transcript(&path) {
            Err(Error::Io { path: p, .. }) => assert_eq!(p, path),
            other => panic!("expected io error, got {other:?}"),
        }
    }

    #[test]
    fn agent_bundle_round_trip() {
        let bundle = sample_bundle();
        let dir = tempfile::tempdir().unwrap();
        let path = write_agent_bundle(dir.path(), &bundle).unwrap();
        assert_eq!(
            path.file_name().unwrap().to_str().unwrap(),
            "aristotle.agent.json"
        );
        let back = read_agent_bundle(&path).unwrap();
        assert_eq!(back, bundle);
        let agent = back.into_agent().unwrap();
        assert_eq!(agent.profile.agent_id, "aristotle");
        assert_eq!(agent.index.len(), agent.corpus.chunks.len());
    }

    #[test]
    fn bundle_validation_rejects_index_corpus_mismatch() {
        let mut bundle = sample_bundle();
        bundle.index.entries.pop();
        assert!(bundle.validate().is_err());

        let mut bundle = sample_bundle();
        bundle.corpus.philosopher_id = "plato".into();
        assert!(bundle.validate().is_err());

        let mut bundle = sample_bundle();
        bundle.embedder = LexicalEmbedder::new(64, DEFAULT_HASH_SEED + 1);
        assert!(bundle.validate().is_err());
    }

    #[test]
    fn graphml_round_trips_through_a_parser() {
        let transcript = maieutic_fixture();
        let network = build_network(&transcript).unwrap();
        let export = to_graphml(&network.keyword_view, &ExportOptions::default()).unwrap();
        assert!(export.warnings.is_empty(), "{:?}", export.warnings);

        let mut reader = quick_xml::Reader::from_str(&export.content);
        let mut nodes = 0;
        let mut edges = 0;
        let mut kinds: BTreeSet<String> = BTreeSet::new();
        let mut in_kind_data = false;
        let mut buf = Vec::new();
        loop {
            match reader.read_event_into(&mut buf).unwrap() {
                Event::Start(el) => match el.name().as_ref() {
                    b"node" => nodes += 1,
                    b"edge" => edges += 1,
                    b"data" => {
                        in_kind_data = el.attributes().flatten().any(|a| {
                            a.key.as_ref() == b"key" && a.value.as_ref() == b"d_kind"
                        });
                    }
                    _ => {}
                },
                Event::Text(t) if in_kind_data => {
                    kinds.insert(t.unescape().unwrap().into_owned());
                    in_kind_data = false;
                }
                Event::Eof => break,
                _ => {}
            }
            buf.clear();
        }
        assert_eq!(nodes, network.keyword_view.node_count());
        assert_eq!(edges, network.keyword_view.edge_count());
        assert_eq!(
            kinds,
            ["intra-chunk", "maieutic"]
                .iter()
                .map(|s| s.to_string())
                .collect()
        );
    }

    #[test]
    fn graphml_escapes_special_characters() {
        let (t, _) = synthetic_transcript(
            Condition::QuestionOff,
            &[AnswerSpec::plain("nietzsche", SET_BOOK)],
        );
        let mut network = build_network(&t).unwrap();
        // force a label that needs escaping
        for attrs in network.keyword_view.nodes.values_mut() {
            attrs.agent_id = "a<b>&\"c\"".into();
        }
        let export = to_graphml(&network.keyword_view, &ExportOptions::default()).unwrap();
        assert!(export.content.contains("a&lt;b&gt;&amp;"));
        // still parses
        let mut reader = quick_xml::Reader::from_str(&export.content);
        let mut buf = Vec::new();
        loop {
            match reader.read_event_into(&mut buf).unwrap() {
                Event::Eof => break,
                _ => {}
            }
            buf.clear();
        }
    }

    #[test]
    fn dot_marks_maieutic_edges_red_and_is_deterministic() {
        let transcript = maieutic_fixture();
        let network = build_network(&transcript).unwrap();
        let export = to_dot(&network.concept_view, &ExportOptions::default());
        assert!(export.warnings.is_empty());
        assert!(export.content.starts_with("graph \"epistemo-concept\" {"));
        assert!(export.content.contains("\"c1\" -- \"c3\" [kind=\"maieutic\", color=\"red\", style=\"bold\"];"));
        assert!(export.content.contains("fillcolor=\"red\"")); // nietzsche
        assert!(export.content.contains("fillcolor=\"blue\"")); // aristotle
        let again = to_dot(&network.concept_view, &ExportOptions::default());
        assert_eq!(export.content, again.content);
    }

    #[test]
    fn exports_embed_provenance_when_given() {
        let transcript = maieutic_fixture();
        let network = build_network(&transcript).unwrap();
        let options = ExportOptions {
            provenance: Some(Provenance::of(&transcript)),
            ..ExportOptions::default()
        };
        let dot = to_dot(&network.concept_view, &options);
        assert!(dot.content.starts_with(&format!(
            "// epistemo tool_version={} config_digest={}\n",
            transcript.tool_version, transcript.config_digest
        )));
        let graphml = to_graphml(&network.concept_view, &options).unwrap();
        assert!(graphml
            .content
            .contains(&format!("config_digest={}", transcript.config_digest)));
        // the comment does not break parsing
        let mut reader = quick_xml::Reader::from_str(&graphml.content);
        let mut buf = Vec::new();
        loop {
            match reader.read_event_into(&mut buf).unwrap() {
                Event::Eof => break,
                _ => {}
            }
            buf.clear();
        }
    }

    #[test]
    fn bundle_digest_is_tamper_evident() {
        let mut bundle = sample_bundle();
        bundle.chunk_tokens = 32;
        match bundle.validate() {
            Err(Error::Validation(m)) => assert!(m.contains("digest"), "{m}"),
            other => panic!("expected digest mismatch, got {other:?}"),
        }
    }

    #[test]
    fn unknown_agent_renders_gray_with_warning() {
        let (t, _) = synthetic_transcript(
            Condition::QuestionOff,
            &[AnswerSpec::plain("hypatia", SET_BOOK)],
        );
        let network = build_network(&t).unwrap();
        let export = to_dot(&network.concept_view, &ExportOptions::default());
        assert_eq!(export.warnings.len(), 1);
        assert!(export.warnings[0].contains("hypatia"));
        assert!(export.content.contains("fillcolor=\"gray\""));
    }

    #[test]
    fn csv_has_pinned_header_and_rows() {
        let (t, _) = synthetic_transcript(
            Condition::QuestionOff,
            &[AnswerSpec::plain("a", SET_BOOK)],
        );
        let network = build_network(&t).unwrap();
        let curve = centrality_curve(&network, Level::Keyword, true);
        let csv = curves_to_csv(&[curve]);
        assert_eq!(
            csv,
            "level,include_maieutic,k,n,c_d,isolates\nkeyword,true,1,5,1.000000,1\n"
        );
    }

    #[test]
    fn analysis_report_round_trips_and_reflects_the_condition() {
        let transcript = maieutic_fixture();
        let report = analyze_transcript(&transcript).unwrap();
        assert_eq!(report.reports.len(), 4);
        assert_eq!(report.curves.len(), 4);
        assert_eq!(report.condition_delta["concept"], 1.0);
        assert!(report.coherence.is_some());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("analysis.json");
        write_analysis_report(&path, &report).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let back: AnalysisReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
    }
}
