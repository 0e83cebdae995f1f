//! Multi-agent debate orchestration.
//!
//! A debate starts from a single human seed question (turn 0). Each round,
//! the agent most confident about the pending query — measured by maximum
//! inner product between the query embedding and the agent's chunk index —
//! answers it from its own corpus. Under the `maieutic` condition the
//! answering agent then formulates a question from its answer's keywords,
//! and the question is routed to the most confident *other* agent; under
//! `question-off` the answer text itself becomes the next query (handed to
//! an agent other than the answerer). The loop stops once `max_turns`
//! answers exist.
//!
//! With the extractive backend and lexical embedder the whole process is
//! a pure function of the config: same config + seed → byte-identical
//! transcript.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conceptnet::{extract_keywords, KEYWORDS_PER_CHUNK};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::generation::{
    hex_encode, ContextChunk, GenerationBackend, GenerationRequest, GenerationTask,
    MIN_BUDGET_TOKENS,
};
use crate::retrieval::{mips_max, score_distribution, Embedder, RetrievalIndex};
use crate::stopwords::StopList;
use crate::SCHEMA_VERSION;

/// Reserved speaker id for the human seed question.
pub const HUMAN_SPEAKER: &str = "human";
/// Default answer budget, in tokens.
pub const DEFAULT_BUDGET_TOKENS: usize = 120;

/// Static description of one debate participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub agent_id: String,
    /// Provenance label shown in every export; must contain
    /// "AI-clone of" or "inspired by".
    pub display_label: String,
    /// Logical reference to the corpus artifact (a name, not a local
    /// path, so digests stay machine-independent).
    pub corpus_ref: String,
    pub index_ref: String,
    /// Export color hint (e.g. "blue" for aristotle).
    pub color: String,
}

impl AgentProfile {
    pub fn validate(&self) -> Result<()> {
        if self.agent_id.is_empty() || self.agent_id == HUMAN_SPEAKER {
            return Err(Error::validation(format!(
                "agent_id {:?} is reserved or empty",
                self.agent_id
            )));
        }
        if !self.display_label.contains("AI-clone of")
            && !self.display_label.contains("inspired by")
        {
            return Err(Error::validation(format!(
                "display_label {:?} lacks a provenance phrase (\"AI-clone of\" or \"inspired by\")",
                self.display_label
            )));
        }
        Ok(())
    }
}

/// Debate condition: with machine question-asking, or without.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Maieutic,
    QuestionOff,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Condition::Maieutic => write!(f, "maieutic"),
            Condition::QuestionOff => write!(f, "question-off"),
        }
    }
}

/// Full specification of one debate run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateConfig {
    /// Ordered; order breaks speaker-selection ties.
    pub agents: Vec<AgentProfile>,
    pub initial_question: String,
    /// Number of *answer* turns to produce (questions don't count).
    pub max_turns: usize,
    pub condition: Condition,
    /// Retrieval depth per answer.
    pub k: usize,
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget_tokens: usize,
    #[serde(default)]
    pub temperature: f64,
}

fn default_budget() -> usize {
    DEFAULT_BUDGET_TOKENS
}

impl DebateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.agents.len() < 2 {
            return Err(Error::validation("debate needs at least 2 agents"));
        }
        let mut ids = BTreeSet::new();
        for profile in &self.agents {
            profile.validate()?;
            if !ids.insert(profile.agent_id.as_str()) {
                return Err(Error::validation(format!(
                    "duplicate agent_id {:?}",
                    profile.agent_id
                )));
            }
        }
        if self.initial_question.trim().is_empty() {
            return Err(Error::validation("initial_question is empty"));
        }
        if self.max_turns == 0 {
            return Err(Error::validation("max_turns must be ≥ 1"));
        }
        if self.k == 0 {
            return Err(Error::validation("k must be ≥ 1"));
        }
        if self.budget_tokens < MIN_BUDGET_TOKENS {
            return Err(Error::validation(format!(
                "budget_tokens {} below minimum {MIN_BUDGET_TOKENS}",
                self.budget_tokens
            )));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, hex-encoded. Recorded on the
    /// transcript so any artifact can be traced to its exact config.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(&json);
        hex_encode(&hasher.finalize())
    }
}

/// What a turn is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TurnKind {
    SeedQuestion,
    Answer,
    MachineQuestion,
}

/// Retrieval provenance: one retrieved chunk reference on an answer turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedRef {
    pub chunk_id: String,
    pub probability: f64,
}

/// One transcript entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    /// `agent_id`, or `"human"` for the seed question.
    pub speaker: String,
    pub kind: TurnKind,
    pub text: String,
    /// Target agent of a machine question.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub addressed_to: Option<String>,
    /// The earlier turn this one responds to: for answers, the query turn;
    /// for machine questions, the answer they grew out of.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triggered_by: Option<usize>,
    /// Top-k retrieval provenance; answer turns only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieved: Option<Vec<RetrievedRef>>,
    /// Exactly 5 extracted keywords; answer turns only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keywords: Option<Vec<String>>,
}

/// Roster entry carried on the transcript so exports can label agents
/// without the original config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub agent_id: String,
    pub display_label: String,
    pub color: String,
}

/// A complete (or explicitly incomplete) debate record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub schema_version: String,
    pub tool_version: String,
    pub config_digest: String,
    pub condition: Condition,
    pub seed: u64,
    pub agents: Vec<RosterEntry>,
    /// True when the debate aborted before reaching max_turns answers.
    #[serde(default)]
    pub incomplete: bool,
    pub turns: Vec<Turn>,
}

impl Transcript {
    /// Answer turns in order.
    pub fn answers(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| t.kind == TurnKind::Answer)
    }

    pub fn roster_entry(&self, agent_id: &str) -> Option<&RosterEntry> {
        self.agents.iter().find(|a| a.agent_id == agent_id)
    }

    /// Checks every schema invariant, naming the offending turn and field.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::UnsupportedVersion {
                found: self.schema_version.clone(),
                supported: SCHEMA_VERSION.to_string(),
            });
        }
        let turn_err = |index: usize, message: &str| Error::Turn {
            index,
            message: message.to_string(),
        };
        for (i, turn) in self.turns.iter().enumerate() {
            if turn.index != i {
                return Err(turn_err(
                    i,
                    &format!("non-contiguous index: found {}, expected {i}", turn.index),
                ));
            }
            if i == 0 && turn.kind != TurnKind::SeedQuestion {
                return Err(turn_err(0, "turn 0 must be the seed question"));
            }
            if i > 0 && turn.kind == TurnKind::SeedQuestion {
                return Err(turn_err(i, "seed question after turn 0"));
            }
            if turn.text.is_empty() {
                return Err(turn_err(i, "empty text"));
            }
            if let Some(j) = turn.triggered_by {
                if j >= i {
                    return Err(turn_err(i, &format!("triggered_by {j} is not < index")));
                }
            }
            match turn.kind {
                TurnKind::SeedQuestion => {
                    if turn.speaker != HUMAN_SPEAKER {
                        return Err(turn_err(i, "seed question speaker must be \"human\""));
                    }
                }
                TurnKind::Answer => {
                    if self.roster_entry(&turn.speaker).is_none() {
                        return Err(turn_err(i, "speaker not in agent roster"));
                    }
                    if turn.triggered_by.is_none() {
                        return Err(turn_err(i, "answer missing triggered_by"));
                    }
                    match &turn.retrieved {
                        None => return Err(turn_err(i, "answer missing retrieved provenance")),
                        Some(r) if r.is_empty() => {
                            return Err(turn_err(i, "answer has empty retrieved provenance"))
                        }
                        Some(_) => {}
                    }
                    match &turn.keywords {
                        None => return Err(turn_err(i, "answer missing keywords")),
                        Some(k) if k.len() != KEYWORDS_PER_CHUNK => {
                            return Err(turn_err(
                                i,
                                &format!("answer has {} keywords, expected 5", k.len()),
                            ))
                        }
                        Some(_) => {}
                    }
                }
                TurnKind::MachineQuestion => {
                    if self.condition == Condition::QuestionOff {
                        return Err(turn_err(
                            i,
                            "machine-question turn in a question-off transcript",
                        ));
                    }
                    let Some(target) = &turn.addressed_to else {
                        return Err(turn_err(i, "machine-question missing addressed_to"));
                    };
                    if self.roster_entry(target).is_none() {
                        return Err(turn_err(i, "addressed_to not in agent roster"));
                    }
                    let Some(j) = turn.triggered_by else {
                        return Err(turn_err(i, "machine-question missing triggered_by"));
                    };
                    if self.turns[j].kind != TurnKind::Answer {
                        return Err(turn_err(i, "machine-question must be triggered by an answer"));
                    }
                    if self.agents.len() >= 2 && *target == self.turns[j].speaker {
                        return Err(turn_err(
                            i,
                            "machine-question addressed to the agent who triggered it",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A live participant: profile + corpus + retrieval index + embedder.
pub struct Agent {
    pub profile: AgentProfile,
    pub corpus: Corpus,
    pub index: RetrievalIndex,
    pub embedder: Arc<dyn Embedder>,
}

impl Agent {
    pub fn new(
        profile: AgentProfile,
        corpus: Corpus,
        index: RetrievalIndex,
        embedder: Arc<dyn Embedder>,
    ) -> Result<Self> {
        profile.validate()?;
        if index.is_empty() {
            return Err(Error::validation(format!(
                "agent {:?} has an empty index",
                profile.agent_id
            )));
        }
        for (chunk_id, _) in &index.entries {
            if corpus.chunk(chunk_id).is_none() {
                return Err(Error::validation(format!(
                    "agent {:?}: index entry {chunk_id} has no chunk in the corpus",
                    profile.agent_id
                )));
            }
        }
        Ok(Agent {
            profile,
            corpus,
            index,
            embedder,
        })
    }

    /// MIPS confidence of this agent for a query text.
    fn confidence(&self, query_text: &str) -> Result<f64> {
        let qv = self.embedder.embed(query_text)?;
        let (_, score) = mips_max(&self.index, &qv)?;
        Ok(score)
    }
}

/// Picks the agent most confident about `query_text`: embeds the query
/// (per agent, with that agent's embedder), takes each agent's maximum
/// inner product over its index, and returns the argmax. Ties go to the
/// earlier agent in `agents` order. `exclude` removes one agent from
/// consideration.
pub fn select_next_speaker(
    agents: &[Agent],
    query_text: &str,
    exclude: Option<&str>,
) -> Result<String> {
    let mut best: Option<(f64, &str)> = None;
    for agent in agents {
        if Some(agent.profile.agent_id.as_str()) == exclude {
            continue;
        }
        let score = agent
            .confidence(query_text)?
            .max(f64::NEG_INFINITY);
        match best {
            Some((b, _)) if score <= b => {}
            _ => best = Some((score, &agent.profile.agent_id)),
        }
    }
    best.map(|(_, id)| id.to_string())
        .ok_or_else(|| Error::validation("select_next_speaker: no eligible agent"))
}

/// The pending query an answer turn responds to.
struct Pending {
    text: String,
    turn_index: usize,
    /// Speaker forced by a machine question's addressed_to.
    forced_speaker: Option<String>,
    /// Agent excluded from selection (previous answerer).
    exclude: Option<String>,
}

/// Runs one debate to completion. On backend or routing failure the
/// partial transcript (flagged incomplete) is carried inside
/// [`Error::Aborted`] so callers can persist it.
pub fn run_debate(
    config: &DebateConfig,
    agents: &[Agent],
    backend: &dyn GenerationBackend,
) -> Result<Transcript> {
    config.validate()?;
    if agents.len() != config.agents.len() {
        return Err(Error::validation(format!(
            "config declares {} agents but {} were supplied",
            config.agents.len(),
            agents.len()
        )));
    }
    for (agent, profile) in agents.iter().zip(&config.agents) {
        if agent.profile.agent_id != profile.agent_id {
            return Err(Error::validation(format!(
                "agent order mismatch: config {:?} vs supplied {:?}",
                profile.agent_id, agent.profile.agent_id
            )));
        }
    }

    let stoplist = StopList::default_english();
    let mut transcript = Transcript {
        schema_version: SCHEMA_VERSION.to_string(),
        tool_version: crate::TOOL_VERSION.to_string(),
        config_digest: config.digest(),
        condition: config.condition,
        seed: config.seed,
        agents: config
            .agents
            .iter()
            .map(|p| RosterEntry {
                agent_id: p.agent_id.clone(),
                display_label: p.display_label.clone(),
                color: p.color.clone(),
            })
            .collect(),
        incomplete: false,
        turns: vec![Turn {
            index: 0,
            speaker: HUMAN_SPEAKER.to_string(),
            kind: TurnKind::SeedQuestion,
            text: config.initial_question.clone(),
            addressed_to: None,
            triggered_by: None,
            retrieved: None,
            keywords: None,
        }],
    };

    let mut already_asked: BTreeSet<String> = BTreeSet::new();
    already_asked.insert(config.initial_question.clone());

    let mut pending = Pending {
        text: config.initial_question.clone(),
        turn_index: 0,
        forced_speaker: None,
        exclude: None,
    };
    let mut answers = 0usize;

    // Any failure from here on aborts with the partial transcript.
    let abort = |mut t: Transcript, e: Error| -> Error {
        t.incomplete = true;
        Error::Aborted {
            partial: Box::new(t),
            source: Box::new(e),
        }
    };

    while answers < config.max_turns {
        // 1. Who answers?
        let speaker_id = match &pending.forced_speaker {
            Some(id) => id.clone(),
            None => {
                match select_next_speaker(agents, &pending.text, pending.exclude.as_deref()) {
                    Ok(id) => id,
                    Err(e) => return Err(abort(transcript, e)),
                }
            }
        };
        let speaker = agents
            .iter()
            .find(|a| a.profile.agent_id == speaker_id)
            .expect("selected speaker exists");

        // 2. Retrieve and answer.
        let turn_index = transcript.turns.len();
        let turn_seed = config.seed.wrapping_add(turn_index as u64);
        let answer = (|| -> Result<(Turn, Vec<String>)> {
            let qv = speaker.embedder.embed(&pending.text)?;
            let selection = score_distribution(&speaker.index, &qv, config.k)?;
            let retrieved: Vec<ContextChunk> = selection
                .chunks
                .iter()
                .map(|s| {
                    let chunk = speaker.corpus.chunk(&s.chunk_id).ok_or_else(|| {
                        Error::internal(format!(
                            "retrieved chunk {} missing from corpus",
                            s.chunk_id
                        ))
                    })?;
                    Ok(ContextChunk {
                        chunk_id: s.chunk_id.clone(),
                        probability: s.probability,
                        text: chunk.text.clone(),
                    })
                })
                .collect::<Result<_>>()?;
            let request = GenerationRequest {
                persona_label: speaker.profile.display_label.clone(),
                task: GenerationTask::Answer,
                input_text: pending.text.clone(),
                retrieved,
                budget_tokens: config.budget_tokens,
                seed: turn_seed,
                temperature: config.temperature,
            };
            let generated = backend.generate_answer(&request)?;
            let keywords = extract_keywords(&generated.text, &stoplist)?;
            let turn = Turn {
                index: turn_index,
                speaker: speaker_id.clone(),
                kind: TurnKind::Answer,
                text: generated.text,
                addressed_to: None,
                triggered_by: Some(pending.turn_index),
                retrieved: Some(
                    selection
                        .chunks
                        .iter()
                        .map(|s| RetrievedRef {
                            chunk_id: s.chunk_id.clone(),
                            probability: s.probability,
                        })
                        .collect(),
                ),
                keywords: Some(keywords.clone()),
            };
            Ok((turn, keywords))
        })();
        let (answer_turn, keywords) = match answer {
            Ok(pair) => pair,
            Err(e) => return Err(abort(transcript, e)),
        };
        let answer_index = answer_turn.index;
        let answer_text = answer_turn.text.clone();
        transcript.turns.push(answer_turn);
        answers += 1;
        if answers == config.max_turns {
            break; // no dangling question after the final answer
        }

        // 3. Produce the next query per condition.
        match config.condition {
            Condition::Maieutic => {
                let request = GenerationRequest {
                    persona_label: speaker.profile.display_label.clone(),
                    task: GenerationTask::Question,
                    input_text: answer_text.clone(),
                    retrieved: vec![],
                    budget_tokens: config.budget_tokens,
                    seed: turn_seed,
                    temperature: config.temperature,
                };
                let question = match backend.formulate_question(&request, &keywords, &already_asked)
                {
                    Ok(q) => q,
                    Err(e) => return Err(abort(transcript, e)),
                };
                match question {
                    Some(generated) => {
                        let target = match select_next_speaker(
                            agents,
                            &generated.text,
                            Some(speaker_id.as_str()),
                        ) {
                            Ok(t) => t,
                            Err(e) => return Err(abort(transcript, e)),
                        };
                        already_asked.insert(generated.text.clone());
                        let q_index = transcript.turns.len();
                        transcript.turns.push(Turn {
                            index: q_index,
                            speaker: speaker_id.clone(),
                            kind: TurnKind::MachineQuestion,
                            text: generated.text.clone(),
                            addressed_to: Some(target.clone()),
                            triggered_by: Some(answer_index),
                            retrieved: None,
                            keywords: None,
                        });
                        pending = Pending {
                            text: generated.text,
                            turn_index: q_index,
                            forced_speaker: Some(target),
                            exclude: None,
                        };
                    }
                    None => {
                        // Keyword questions exhausted: fall back to
                        // feeding the answer forward, like question-off.
                        log::info!(
                            "maieutic chain exhausted at turn {answer_index}; forwarding answer"
                        );
                        pending = Pending {
                            text: answer_text,
                            turn_index: answer_index,
                            forced_speaker: None,
                            exclude: Some(speaker_id),
                        };
                    }
                }
            }
            Condition::QuestionOff => {
                pending = Pending {
                    text: answer_text,
                    turn_index: answer_index,
                    forced_speaker: None,
                    exclude: Some(speaker_id),
                };
            }
        }
    }

    debug_assert!(transcript.validate().is_ok());
    Ok(transcript)
}

/// Reads a transcript file and checks every schema invariant.
pub fn replay(transcript_path: &Path) -> Result<Transcript> {
    crate::io::read_transcript(transcript_path)
}
