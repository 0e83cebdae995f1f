//! `epistemo` — ingest philosopher corpora, run seeded multi-agent
//! debates, analyze transcripts into concept-network metrics, and export
//! graphs.
//!
//! Every command prints a single-line JSON summary on stdout; logs go to
//! stderr. Exit codes: 0 success, 2 usage/validation, 3 backend or
//! transport failure, 4 internal invariant breach.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use epistemo_core::conceptnet::{agent_subgraph, build_network, GraphView, Level};
use epistemo_core::corpus::{load_corpus, DEFAULT_CHUNK_TOKENS, DEFAULT_OVERLAP_TOKENS};
use epistemo_core::dialogue::{
    run_debate, Agent, AgentProfile, Condition, DebateConfig, TurnKind, DEFAULT_BUDGET_TOKENS,
};
use epistemo_core::endpoint::{EndpointBackend, EndpointConfig};
use epistemo_core::error::{Error, Result};
use epistemo_core::generation::{ExtractiveBackend, GenerationBackend};
use epistemo_core::io::{
    bundle_filename, curves_to_csv, read_agent_bundle, read_transcript, to_dot, to_graphml,
    write_agent_bundle, write_analysis_report, write_text, write_transcript, AgentBundle,
    ExportOptions, IngestOptions, Provenance,
};
use epistemo_core::retrieval::{build_index, LexicalEmbedder, DEFAULT_DIMENSION};

#[derive(Parser)]
#[command(
    name = "epistemo",
    version,
    about = "Retrieval-grounded philosopher debates and concept-network analytics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a manifest, segment its documents, build the retrieval index,
    /// and persist the agent bundle.
    Ingest(IngestArgs),
    /// Run a seeded debate among previously ingested agents.
    Debate(DebateArgs),
    /// Compute concept-network metrics for a transcript.
    Analyze(AnalyzeArgs),
    /// Export a transcript's concept network as GraphML or DOT.
    Export(ExportArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Path to the philosopher's manifest JSON.
    #[arg(long)]
    manifest: PathBuf,
    /// Directory receiving `<agent_id>.agent.json`.
    #[arg(long)]
    out: PathBuf,
    /// Target tokens per chunk.
    #[arg(long, default_value_t = DEFAULT_CHUNK_TOKENS)]
    chunk_tokens: usize,
    /// Token overlap between consecutive chunks.
    #[arg(long, default_value_t = DEFAULT_OVERLAP_TOKENS)]
    overlap: usize,
    /// Embedding dimension of the lexical embedder.
    #[arg(long, default_value_t = DEFAULT_DIMENSION)]
    dimension: usize,
    /// Display color recorded in the agent's profile.
    #[arg(long)]
    color: Option<String>,
}

#[derive(Args)]
struct DebateArgs {
    /// Directory holding the agents' `.agent.json` bundles.
    #[arg(long)]
    bundles: PathBuf,
    /// Agent ids, comma separated, in speaking-priority order.
    #[arg(long, value_delimiter = ',', required = true)]
    agents: Vec<String>,
    /// The human seed question opening the debate.
    #[arg(long)]
    question: String,
    /// Number of answers to produce.
    #[arg(long, default_value_t = 8)]
    max_turns: usize,
    /// Debate condition.
    #[arg(long, value_enum, default_value_t = ConditionArg::Maieutic)]
    condition: ConditionArg,
    /// Retrieval depth (top-k chunks per answer).
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// RNG seed; required so every run is reproducible on purpose.
    #[arg(long)]
    seed: u64,
    /// Token budget per generated answer.
    #[arg(long, default_value_t = DEFAULT_BUDGET_TOKENS)]
    budget_tokens: usize,
    /// Sampling temperature forwarded to the backend.
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    /// Generation backend.
    #[arg(long, value_enum, default_value_t = BackendArg::Extractive)]
    backend: BackendArg,
    /// Acknowledge that an external endpoint may not reproduce transcripts.
    #[arg(long)]
    ack_nondeterministic: bool,
    /// Output transcript path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Transcript to analyze.
    #[arg(long)]
    transcript: PathBuf,
    /// Network level the summary and curve refer to.
    #[arg(long, value_enum, default_value_t = LevelArg::Concept)]
    level: LevelArg,
    /// Keep maieutic edges (default).
    #[arg(long, conflicts_with = "without_maieutic")]
    with_maieutic: bool,
    /// Strip maieutic edges before measuring.
    #[arg(long)]
    without_maieutic: bool,
    /// Also write the centrality growth curve CSV.
    #[arg(long)]
    curve: bool,
    /// Include local coherence in the summary.
    #[arg(long)]
    coherence: bool,
    /// Output directory for analysis artifacts.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    /// Transcript whose network to export.
    #[arg(long)]
    transcript: PathBuf,
    /// Output format.
    #[arg(long, value_enum)]
    format: FormatArg,
    /// Network level to export.
    #[arg(long, value_enum, default_value_t = LevelArg::Concept)]
    level: LevelArg,
    /// Restrict to one agent's subgraph.
    #[arg(long)]
    agent: Option<String>,
    /// Strip maieutic edges from the export.
    #[arg(long)]
    without_maieutic: bool,
    /// Output file path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConditionArg {
    Maieutic,
    QuestionOff,
}

impl From<ConditionArg> for Condition {
    fn from(value: ConditionArg) -> Condition {
        match value {
            ConditionArg::Maieutic => Condition::Maieutic,
            ConditionArg::QuestionOff => Condition::QuestionOff,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LevelArg {
    Keyword,
    Concept,
}

impl From<LevelArg> for Level {
    fn from(value: LevelArg) -> Level {
        match value {
            LevelArg::Keyword => Level::Keyword,
            LevelArg::Concept => Level::Concept,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Extractive,
    Endpoint,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Graphml,
    Dot,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Debate(args) => cmd_debate(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Export(args) => cmd_export(args),
    };
    match outcome {
        Ok(summary) => println!("{summary}"),
        Err(error) => {
            log::error!("{error}");
            std::process::exit(error.exit_code());
        }
    }
}

/// Capitalizes each hyphen- or space-separated word: "sun-tzu" → "Sun-Tzu".
fn title_case(id: &str) -> String {
    let mut out = String::with_capacity(id.len());
    let mut start_of_word = true;
    for ch in id.chars() {
        if start_of_word {
            out.extend(ch.to_uppercase());
        } else {
            out.push(ch);
        }
        start_of_word = ch == '-' || ch == ' ' || ch == '_';
    }
    out
}

fn cmd_ingest(args: IngestArgs) -> Result<String> {
    let manifest = epistemo_core::corpus::Manifest::load(&args.manifest)?;
    let mut corpus = load_corpus(&args.manifest)?;
    corpus.segment_all(args.chunk_tokens, args.overlap)?;
    if corpus.chunks.is_empty() {
        return Err(Error::validation(format!(
            "manifest {} produced no chunks",
            args.manifest.display()
        )));
    }
    let embedder = LexicalEmbedder::fit_corpus(
        &corpus,
        args.dimension,
        epistemo_core::retrieval::DEFAULT_HASH_SEED,
    );
    let index = build_index(&corpus, &embedder)?;
    let agent_id = corpus.philosopher_id.clone();
    let display_label = manifest
        .display_label
        .clone()
        .unwrap_or_else(|| format!("AI-clone of {}", title_case(&agent_id)));
    let color = args.color.unwrap_or_else(|| {
        ExportOptions::default()
            .color_map
            .get(&agent_id)
            .cloned()
            .unwrap_or_else(|| epistemo_core::io::FALLBACK_COLOR.to_string())
    });
    let profile = AgentProfile {
        agent_id: agent_id.clone(),
        display_label,
        corpus_ref: bundle_filename(&agent_id),
        index_ref: bundle_filename(&agent_id),
        color,
    };
    let documents = corpus.documents.len();
    let chunks = corpus.chunks.len();
    let bundle = AgentBundle::assemble(
        profile,
        corpus,
        index,
        embedder,
        IngestOptions {
            chunk_tokens: args.chunk_tokens,
            overlap_tokens: args.overlap,
        },
    )?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let path = write_agent_bundle(&args.out, &bundle)?;
    log::info!(
        "ingested {agent_id}: {documents} documents, {chunks} chunks → {}",
        path.display()
    );
    Ok(json!({
        "command": "ingest",
        "agent_id": agent_id,
        "documents": documents,
        "chunks": chunks,
        "dimension": args.dimension,
        "tool_version": epistemo_core::TOOL_VERSION,
        "config_digest": bundle.config_digest,
        "out": path.display().to_string(),
    })
    .to_string())
}

fn cmd_debate(args: DebateArgs) -> Result<String> {
    let mut agents: Vec<Agent> = Vec::with_capacity(args.agents.len());
    let mut profiles: Vec<AgentProfile> = Vec::with_capacity(args.agents.len());
    for id in &args.agents {
        let path = args.bundles.join(bundle_filename(id));
        let bundle = read_agent_bundle(&path)?;
        if bundle.profile.agent_id != *id {
            return Err(Error::validation(format!(
                "bundle {} belongs to {:?}, not {id:?}",
                path.display(),
                bundle.profile.agent_id
            )));
        }
        profiles.push(bundle.profile.clone());
        agents.push(bundle.into_agent()?);
    }
    let config = DebateConfig {
        agents: profiles,
        initial_question: args.question.clone(),
        max_turns: args.max_turns,
        condition: args.condition.into(),
        k: args.k,
        seed: args.seed,
        budget_tokens: args.budget_tokens,
        temperature: args.temperature,
    };
    let backend: Box<dyn GenerationBackend> = match args.backend {
        BackendArg::Extractive => Box::new(ExtractiveBackend::new()),
        BackendArg::Endpoint => {
            if !args.ack_nondeterministic {
                return Err(Error::validation(
                    "--backend endpoint may not reproduce transcripts; pass \
                     --ack-nondeterministic to proceed",
                ));
            }
            let endpoint_config = EndpointConfig::gen_from_env().ok_or_else(|| {
                Error::validation(
                    "--backend endpoint requires EPISTEMO_GEN_URL (and optionally \
                     EPISTEMO_API_KEY) in the environment",
                )
            })?;
            Box::new(EndpointBackend::new(endpoint_config)?)
        }
    };
    let transcript = match run_debate(&config, &agents, backend.as_ref()) {
        Ok(t) => t,
        Err(Error::Aborted { partial, source }) => {
            write_transcript(&args.out, &partial)?;
            log::warn!(
                "debate aborted; partial transcript ({} turns, flagged incomplete) \
                 written to {}",
                partial.turns.len(),
                args.out.display()
            );
            return Err(Error::Aborted { partial, source });
        }
        Err(e) => return Err(e),
    };
    write_transcript(&args.out, &transcript)?;
    let answers = transcript.answers().count();
    let machine_questions = transcript
        .turns
        .iter()
        .filter(|t| t.kind == TurnKind::MachineQuestion)
        .count();
    log::info!(
        "debate finished: {} turns ({answers} answers, {machine_questions} machine questions) → {}",
        transcript.turns.len(),
        args.out.display()
    );
    Ok(json!({
        "command": "debate",
        "condition": transcript.condition,
        "seed": transcript.seed,
        "turns": transcript.turns.len(),
        "answers": answers,
        "machine_questions": machine_questions,
        "tool_version": transcript.tool_version,
        "config_digest": transcript.config_digest,
        "out": args.out.display().to_string(),
    })
    .to_string())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<String> {
    let include_maieutic = !args.without_maieutic;
    let level: Level = args.level.into();
    let transcript = read_transcript(&args.transcript)?;
    let report = epistemo_core::io::analyze_transcript(&transcript)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let report_path = args.out.join("analysis.json");
    write_analysis_report(&report_path, &report)?;
    let mut written = vec![report_path.display().to_string()];

    let selected = report
        .reports
        .iter()
        .find(|r| r.level == level && r.include_maieutic == include_maieutic)
        .ok_or_else(|| Error::internal("analysis report missing a level/maieutic combination"))?;
    if args.curve {
        let curve = report
            .curves
            .iter()
            .find(|c| c.level == level && c.include_maieutic == include_maieutic)
            .ok_or_else(|| Error::internal("analysis curves missing a level/maieutic combination"))?;
        let csv_path = args.out.join("curve.csv");
        write_text(&csv_path, &curves_to_csv(std::slice::from_ref(curve)))?;
        written.push(csv_path.display().to_string());
    }

    let mut summary = json!({
        "command": "analyze",
        "level": level.to_string(),
        "include_maieutic": include_maieutic,
        "n": selected.node_count,
        "edges": selected.edge_count,
        "c_d": selected.c_d,
        "isolates": selected.isolates,
        "condition_delta": report.condition_delta[&level.to_string()],
        "tool_version": report.tool_version,
        "config_digest": report.config_digest,
        "out": written,
    });
    if args.coherence {
        summary["coherence"] = match &report.coherence {
            Some(c) => json!({
                "pair_count": c.pair_count,
                "mean_cosine": c.mean_cosine,
                "degenerate_pairs": c.degenerate_pairs,
            }),
            None => serde_json::Value::Null,
        };
    }
    log::info!(
        "analyzed {}: level={level} include_maieutic={include_maieutic} c_d={:.6}",
        args.transcript.display(),
        selected.c_d
    );
    Ok(summary.to_string())
}

fn cmd_export(args: ExportArgs) -> Result<String> {
    let include_maieutic = !args.without_maieutic;
    let level: Level = args.level.into();
    let transcript = read_transcript(&args.transcript)?;
    let network = build_network(&transcript)?;
    let network = match &args.agent {
        Some(agent) => agent_subgraph(&network, agent, include_maieutic)?,
        None => network,
    };
    let view: &GraphView = match level {
        Level::Keyword => &network.keyword_view,
        Level::Concept => &network.concept_view,
    };
    let owned;
    let view = if include_maieutic {
        view
    } else {
        owned = view.without_maieutic();
        &owned
    };

    // roster colors first, the conventional palette as fallback
    let mut options = ExportOptions {
        provenance: Some(Provenance::of(&transcript)),
        ..ExportOptions::default()
    };
    for entry in &transcript.agents {
        options
            .color_map
            .insert(entry.agent_id.clone(), entry.color.clone());
    }

    let export = match args.format {
        FormatArg::Graphml => to_graphml(view, &options)?,
        FormatArg::Dot => to_dot(view, &options),
    };
    for warning in &export.warnings {
        log::warn!("{warning}");
    }
    write_text(&args.out, &export.content)?;
    log::info!(
        "exported {} nodes / {} edges → {}",
        view.node_count(),
        view.edge_count(),
        args.out.display()
    );
    Ok(json!({
        "command": "export",
        "format": match args.format { FormatArg::Graphml => "graphml", FormatArg::Dot => "dot" },
        "level": level.to_string(),
        "agent": args.agent,
        "include_maieutic": include_maieutic,
        "nodes": view.node_count(),
        "edges": view.edge_count(),
        "warnings": export.warnings.len(),
        "tool_version": transcript.tool_version,
        "config_digest": transcript.config_digest,
        "out": args.out.display().to_string(),
    })
    .to_string())
}
