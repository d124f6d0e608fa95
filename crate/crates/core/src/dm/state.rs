use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::Corpus;
use crate::engagement::{ChitChatState, PakPair};
use crate::search::NutritionConstraint;

/// Maximum snapshots kept on the history stack; the oldest are dropped.
pub const HISTORY_LIMIT: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    TaskSearch,
    TaskPreparation,
    TaskExecution,
    Closed,
}

/// Execution sub-states chit-chat can return to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnSub {
    Step,
    PakOffer,
    PakAnswer,
}

impl ReturnSub {
    pub fn sub(self) -> Sub {
        match self {
            ReturnSub::Step => Sub::Step,
            ReturnSub::PakOffer => Sub::PakOffer,
            ReturnSub::PakAnswer => Sub::PakAnswer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Sub {
    Welcome,
    Clarify,
    Results { page: usize },
    Overview,
    Step,
    PakOffer,
    PakAnswer,
    ChitChat { return_to: ReturnSub },
    ConfirmComplete,
    Complete,
    Closed,
}

/// Every state key, in table order.
pub const STATE_KEYS: &[&str] = &[
    "search.welcome",
    "search.clarify",
    "search.results",
    "prep.overview",
    "exec.step",
    "exec.pak_offer",
    "exec.pak_answer",
    "exec.chitchat",
    "exec.confirm_complete",
    "exec.complete",
    "closed",
];

impl Sub {
    pub fn phase(self) -> Phase {
        match self {
            Sub::Welcome | Sub::Clarify | Sub::Results { .. } => Phase::TaskSearch,
            Sub::Overview => Phase::TaskPreparation,
            Sub::Closed => Phase::Closed,
            _ => Phase::TaskExecution,
        }
    }

    /// Key used by the transition table and help templates.
    pub fn key(self) -> &'static str {
        match self {
            Sub::Welcome => "search.welcome",
            Sub::Clarify => "search.clarify",
            Sub::Results { .. } => "search.results",
            Sub::Overview => "prep.overview",
            Sub::Step => "exec.step",
            Sub::PakOffer => "exec.pak_offer",
            Sub::PakAnswer => "exec.pak_answer",
            Sub::ChitChat { .. } => "exec.chitchat",
            Sub::ConfirmComplete => "exec.confirm_complete",
            Sub::Complete => "exec.complete",
            Sub::Closed => "closed",
        }
    }
}

impl fmt::Display for Sub {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sub::Results { page } => write!(f, "search.results({page})"),
            Sub::ChitChat { return_to } => write!(f, "exec.chitchat({return_to:?})"),
            other => f.write_str(other.key()),
        }
    }
}

/// A restorable point on the history stack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub sub: Sub,
    pub selected_task: Option<String>,
    pub step_cursor: usize,
    pub candidates: Vec<String>,
    pub clarify: Option<String>,
}

/// What the user told us about nutrition. `asked` stays false until the
/// clarifying question has been answered or made moot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub asked: bool,
    pub constraint: Option<NutritionConstraint>,
}

impl Profile {
    pub fn as_search_profile(&self) -> Option<Option<&NutritionConstraint>> {
        self.asked.then_some(self.constraint.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueState {
    pub sub: Sub,
    pub selected_task: Option<String>,
    pub candidates: Vec<String>,
    /// Query waiting on the nutrition question.
    pub clarify: Option<String>,
    /// 1-based during execution, 0 otherwise.
    pub step_cursor: usize,
    pub history: Vec<Snapshot>,
    pub profile: Profile,
    pub pak_shown: BTreeSet<(String, String)>,
    pub pak_current: Option<PakPair>,
    pub chitchat: ChitChatState,
}

impl Default for DialogueState {
    fn default() -> Self {
        Self {
            sub: Sub::Welcome,
            selected_task: None,
            candidates: Vec::new(),
            clarify: None,
            step_cursor: 0,
            history: Vec::new(),
            profile: Profile::default(),
            pak_shown: BTreeSet::new(),
            pak_current: None,
            chitchat: ChitChatState::default(),
        }
    }
}

impl DialogueState {
    pub fn phase(&self) -> Phase {
        self.sub.phase()
    }

    pub fn key(&self) -> &'static str {
        self.sub.key()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            sub: self.sub,
            selected_task: self.selected_task.clone(),
            step_cursor: self.step_cursor,
            candidates: self.candidates.clone(),
            clarify: self.clarify.clone(),
        }
    }

    /// Pushes `snap` unless it is a closed state.
    pub fn push_history(&mut self, snap: Snapshot) {
        if snap.sub == Sub::Closed {
            return;
        }
        self.history.push(snap);
        if self.history.len() > HISTORY_LIMIT {
            self.history.remove(0);
        }
    }

    /// Restores the most recent snapshot. Returns false on an empty stack.
    pub fn pop_history(&mut self) -> bool {
        let Some(snap) = self.history.pop() else {
            return false;
        };
        self.sub = snap.sub;
        self.selected_task = snap.selected_task;
        self.step_cursor = snap.step_cursor;
        self.candidates = snap.candidates;
        self.clarify = snap.clarify;
        true
    }

    /// Checks the structural invariants against the corpus.
    pub fn validate(&self, corpus: &Corpus) -> Result<(), String> {
        let phase = self.phase();
        let needs_task = matches!(phase, Phase::TaskPreparation | Phase::TaskExecution);
        if needs_task != self.selected_task.is_some() {
            return Err(format!("selected_task {:?} in {}", self.selected_task, self.sub));
        }
        if let Some(id) = &self.selected_task {
            let doc = corpus.get(id).ok_or_else(|| format!("unknown task {id}"))?;
            if phase == Phase::TaskExecution && !(1..=doc.steps.len()).contains(&self.step_cursor) {
                return Err(format!("cursor {} outside 1..={}", self.step_cursor, doc.steps.len()));
            }
        }
        if phase != Phase::TaskExecution && self.step_cursor != 0 {
            return Err(format!("cursor {} outside execution", self.step_cursor));
        }
        if let Sub::Results { .. } = self.sub {
            if self.candidates.is_empty() {
                return Err("results without candidates".into());
            }
        }
        if (self.sub == Sub::Clarify) != self.clarify.is_some() {
            return Err(format!("clarify query {:?} in {}", self.clarify, self.sub));
        }
        if matches!(self.sub, Sub::PakOffer | Sub::PakAnswer) && self.pak_current.is_none() {
            return Err("pak state without a pair".into());
        }
        if self.history.iter().any(|s| s.sub == Sub::Closed) {
            return Err("closed state on history".into());
        }
        if self.history.len() > HISTORY_LIMIT {
            return Err("history over limit".into());
        }
        Ok(())
    }
}
