use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nlu::INTENT_KEYS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Search,
    Recommend,
    ApplyConstraint,
    SkipClarify,
    Select,
    MoreResults,
    PreviousPage,
    ShowResults,
    ShowOverview,
    StartTask,
    NextStep,
    PreviousStep,
    RepeatStep,
    ResumeStep,
    Details,
    OfferPak,
    PakAnswer,
    Qa,
    ChitchatEnter,
    ChitchatTurn,
    ChitchatExit,
    Complete,
    Restart,
    GoBack,
    Stop,
    Help,
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("transition table: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("transition table: unknown state {0:?}")]
    UnknownState(String),
    #[error("transition table: unknown intent {intent:?} in state {state:?}")]
    UnknownIntent { state: String, intent: String },
    #[error("transition table: state {0:?} has no stop row")]
    MissingStop(String),
    #[error("transition table: state {0:?} has no rows")]
    MissingState(String),
}

/// States that carry rows; `closed` is terminal and has none.
pub const TABLE_STATES: &[&str] = &[
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
];

/// One (state, intent) row of the table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub state: String,
    pub intent: String,
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} --{}-->", self.state, self.intent)
    }
}

/// State x intent -> action, loaded from TOML.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionTable {
    rows: BTreeMap<String, BTreeMap<String, Action>>,
}

impl TransitionTable {
    pub fn from_toml(text: &str) -> Result<Self, TableError> {
        let rows: BTreeMap<String, BTreeMap<String, Action>> = toml::from_str(text)?;
        for (state, intents) in &rows {
            if !TABLE_STATES.contains(&state.as_str()) {
                return Err(TableError::UnknownState(state.clone()));
            }
            for intent in intents.keys() {
                if !INTENT_KEYS.contains(&intent.as_str()) {
                    return Err(TableError::UnknownIntent {
                        state: state.clone(),
                        intent: intent.clone(),
                    });
                }
            }
            if !intents.contains_key("stop") {
                return Err(TableError::MissingStop(state.clone()));
            }
        }
        if let Some(missing) = TABLE_STATES.iter().find(|k| !rows.contains_key(**k)) {
            return Err(TableError::MissingState(missing.to_string()));
        }
        Ok(Self { rows })
    }

    pub fn get(&self, state: &str, intent: &str) -> Option<Action> {
        self.rows.get(state)?.get(intent).copied()
    }

    pub fn has_row(&self, state: &str, intent: &str) -> bool {
        self.get(state, intent).is_some()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Edge, Action)> + '_ {
        self.rows.iter().flat_map(|(s, m)| {
            m.iter().map(move |(i, a)| {
                (
                    Edge {
                        state: s.clone(),
                        intent: i.clone(),
                    },
                    *a,
                )
            })
        })
    }

    pub fn len(&self) -> usize {
        self.rows.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
