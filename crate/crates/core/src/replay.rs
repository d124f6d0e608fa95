//! Scripted dialogues: expected state traces, transcripts, and transition
//! table coverage.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dm::{Edge, Responder, TransitionTable};
use crate::pipeline::Resources;
use crate::response::BotResponse;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("no replay scripts in {0}")]
    Empty(PathBuf),
    #[error("{0}: script has no turns")]
    NoTurns(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptTurn {
    pub user: String,
    /// Expected state key after the turn, e.g. `exec.step`.
    pub state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cursor: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub responder: Option<String>,
    /// Substrings the speech must contain.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub says: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayScript {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub turns: Vec<ScriptTurn>,
}

impl ReplayScript {
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptTurn {
    pub user: String,
    pub intents: Vec<String>,
    pub edge: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aliens_part: Option<usize>,
    pub response: BotResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptReport {
    pub name: String,
    pub greeting: String,
    pub failure: Option<String>,
    pub transcript: Vec<TranscriptTurn>,
    #[serde(skip)]
    pub edges: BTreeSet<Edge>,
}

impl ScriptReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    /// Stable JSON used for golden files.
    pub fn transcript_json(&self) -> String {
        #[derive(Serialize)]
        struct Golden<'a> {
            name: &'a str,
            greeting: &'a str,
            turns: &'a [TranscriptTurn],
        }
        let mut s = serde_json::to_string_pretty(&Golden {
            name: &self.name,
            greeting: &self.greeting,
            turns: &self.transcript,
        })
        .expect("transcript serializes");
        s.push('\n');
        s
    }
}

/// Runs `script` in a fresh session. Stops at the first diverging turn.
pub fn run_script(res: &Resources, script: &ReplayScript) -> ScriptReport {
    let (mut session, greeting) = res.new_session(format!("replay-{}", script.name), script.seed, 0);
    let mut report = ScriptReport {
        name: script.name.clone(),
        greeting: greeting.speech,
        failure: None,
        transcript: Vec::new(),
        edges: BTreeSet::new(),
    };
    for (i, turn) in script.turns.iter().enumerate() {
        let n = i + 1;
        let outcome = match res.turn(&session, &turn.user, n as u64) {
            Ok(o) => o,
            Err(e) => {
                report.failure = Some(format!("turn {n} ({:?}): {e}", turn.user));
                break;
            }
        };
        let snap = &outcome.response.state_snapshot;
        let mut problems = Vec::new();
        if snap.sub != turn.state {
            problems.push(format!("state {} != expected {}", snap.sub, turn.state));
        }
        if let Some(c) = turn.cursor {
            if snap.cursor != c {
                problems.push(format!("cursor {} != expected {c}", snap.cursor));
            }
        }
        if let Some(p) = turn.page {
            if snap.page != Some(p) {
                problems.push(format!("page {:?} != expected {p}", snap.page));
            }
        }
        if let Some(r) = &turn.responder {
            if &outcome.response.responder != r {
                problems.push(format!("responder {} != expected {r}", outcome.response.responder));
            }
        }
        for s in &turn.says {
            if !outcome.response.speech.contains(s.as_str()) {
                problems.push(format!("speech lacks {s:?}"));
            }
        }
        if let Some(e) = &outcome.trace.edge {
            report.edges.insert(e.clone());
        }
        let aliens_part = match &outcome.trace.responder {
            Responder::ChitChatReply { reply } => reply.aliens_part,
            _ => None,
        };
        report.transcript.push(TranscriptTurn {
            user: turn.user.clone(),
            intents: outcome.trace.intents.clone(),
            edge: outcome.trace.edge.as_ref().map(ToString::to_string),
            aliens_part,
            response: outcome.response.clone(),
        });
        session = outcome.session;
        if !problems.is_empty() {
            report.failure = Some(format!(
                "turn {n} ({:?}): {}; speech was {:?}",
                turn.user,
                problems.join(", "),
                outcome.response.speech
            ));
            break;
        }
    }
    report
}

/// Loads every `*.json` script in `dir`, sorted by file name.
pub fn load_scripts(dir: &Path) -> Result<Vec<ReplayScript>, ReplayError> {
    let io = |source| ReplayError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(ReplayError::Empty(dir.to_path_buf()));
    }
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|source| ReplayError::Io {
                path: p.clone(),
                source,
            })?;
            let script = ReplayScript::from_json(&text).map_err(|source| ReplayError::Parse {
                path: p.clone(),
                source,
            })?;
            if script.turns.is_empty() {
                return Err(ReplayError::NoTurns(script.name));
            }
            Ok(script)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coverage {
    pub covered: usize,
    pub total: usize,
    pub missing: Vec<Edge>,
}

impl Coverage {
    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            100.0
        } else {
            100.0 * self.covered as f64 / self.total as f64
        }
    }

    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }
}

pub fn coverage<'a>(table: &TransitionTable, reports: impl IntoIterator<Item = &'a ScriptReport>) -> Coverage {
    let seen: BTreeSet<&Edge> = reports.into_iter().flat_map(|r| r.edges.iter()).collect();
    let all: Vec<Edge> = table.edges().map(|(e, _)| e).collect();
    let missing: Vec<Edge> = all.iter().filter(|e| !seen.contains(e)).cloned().collect();
    Coverage {
        covered: all.len() - missing.len(),
        total: all.len(),
        missing,
    }
}

/// A blacklist probe: `setup` drives a fresh session to `state`, then
/// `text` is sent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetyCase {
    #[serde(default)]
    pub setup: Vec<String>,
    pub state: String,
    pub text: String,
    pub refused: bool,
}

pub fn load_safety_cases(jsonl: &str) -> Result<Vec<SafetyCase>, serde_json::Error> {
    jsonl
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Problems found running `case`; empty when it behaves as labeled. A
/// refusal must leave the state untouched.
pub fn check_safety_case(res: &Resources, case: &SafetyCase) -> Vec<String> {
    let (mut session, _) = res.new_session("safety", 0, 0);
    for (i, u) in case.setup.iter().enumerate() {
        match res.turn(&session, u, i as u64 + 1) {
            Ok(o) => session = o.session,
            Err(e) => return vec![format!("setup {u:?}: {e}")],
        }
    }
    if session.state.key() != case.state {
        return vec![format!("setup reached {} not {}", session.state.key(), case.state)];
    }
    let outcome = match res.turn(&session, &case.text, case.setup.len() as u64 + 1) {
        Ok(o) => o,
        Err(e) => return vec![format!("{e}")],
    };
    let mut problems = Vec::new();
    let refused = outcome.response.responder == "refusal";
    if refused != case.refused {
        problems.push(format!("refused={refused}, expected {}", case.refused));
    }
    if refused && outcome.session.state != session.state {
        problems.push("refusal changed the dialogue state".to_string());
    }
    if let Some(term) = res.blacklist.find(&outcome.response.speech) {
        problems.push(format!("speech contains {term:?}"));
    }
    problems
}
