//! Intent recognition: normalization, a rule-based multi-label
//! recognizer, and dialogue-state filtering.

mod augment;
pub mod eval;
mod rules;

pub use augment::{expand_templates, AugmentError, AugmentedExample, Template, TemplateFile};
pub use rules::{Lexicon, LexiconError, RuleRecognizer};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Next,
    Previous,
    Repeat,
    GoBack,
    MoreResults,
}

impl Direction {
    pub const ALL: [Direction; 5] = [
        Direction::Next,
        Direction::Previous,
        Direction::Repeat,
        Direction::GoBack,
        Direction::MoreResults,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Direction::Next => "next",
            Direction::Previous => "previous",
            Direction::Repeat => "repeat",
            Direction::GoBack => "go_back",
            Direction::MoreResults => "more_results",
        }
    }
}

/// Intent labels, declared in resolution priority order (highest first),
/// so the derived `Ord` sorts a label set by priority.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntentLabel {
    Stop,
    TaskComplete,
    Navigation(Direction),
    Select(usize),
    TaskRequest { query: String },
    DetailRequest,
    PakRequest,
    Question,
    Chat,
    Affirm,
    Negate,
    Neutral,
    OutOfDomain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntentCategory {
    Command,
    Sentiment,
    Utterance,
}

impl IntentLabel {
    /// Key used by the transition table and fixtures.
    pub fn key(&self) -> &'static str {
        match self {
            IntentLabel::Stop => "stop",
            IntentLabel::TaskComplete => "task_complete",
            IntentLabel::Navigation(d) => d.key(),
            IntentLabel::Select(_) => "select",
            IntentLabel::TaskRequest { .. } => "task_request",
            IntentLabel::DetailRequest => "detail_request",
            IntentLabel::PakRequest => "pak_request",
            IntentLabel::Question => "question",
            IntentLabel::Chat => "chat",
            IntentLabel::Affirm => "affirm",
            IntentLabel::Negate => "negate",
            IntentLabel::Neutral => "neutral",
            IntentLabel::OutOfDomain => "out_of_domain",
        }
    }

    pub fn category(&self) -> IntentCategory {
        match self {
            IntentLabel::Stop
            | IntentLabel::TaskComplete
            | IntentLabel::Navigation(_)
            | IntentLabel::Select(_)
            | IntentLabel::DetailRequest
            | IntentLabel::PakRequest => IntentCategory::Command,
            IntentLabel::Affirm | IntentLabel::Negate | IntentLabel::Neutral => IntentCategory::Sentiment,
            IntentLabel::TaskRequest { .. }
            | IntentLabel::Question
            | IntentLabel::Chat
            | IntentLabel::OutOfDomain => IntentCategory::Utterance,
        }
    }
}

/// Every key a label can have, in priority order.
pub const INTENT_KEYS: &[&str] = &[
    "stop",
    "task_complete",
    "next",
    "previous",
    "repeat",
    "go_back",
    "more_results",
    "select",
    "task_request",
    "detail_request",
    "pak_request",
    "question",
    "chat",
    "affirm",
    "negate",
    "neutral",
    "out_of_domain",
];

impl fmt::Display for IntentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntentLabel::Select(k) => write!(f, "select({k})"),
            IntentLabel::TaskRequest { query } => write!(f, "task_request({query})"),
            other => f.write_str(other.key()),
        }
    }
}

impl Serialize for IntentLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub type IntentSet = BTreeSet<IntentLabel>;

pub fn keys(set: &IntentSet) -> BTreeSet<&'static str> {
    set.iter().map(IntentLabel::key).collect()
}

/// Broken [`IntentSet`] invariants, empty when the set is well formed.
/// Select counts as a navigation label.
pub fn violations(set: &IntentSet) -> Vec<String> {
    let mut out = Vec::new();
    if set.is_empty() {
        out.push("empty set".to_string());
    }
    let sentiments = set.iter().filter(|l| l.category() == IntentCategory::Sentiment).count();
    if sentiments > 1 {
        out.push(format!("{sentiments} sentiment labels"));
    }
    let navigation = set
        .iter()
        .filter(|l| matches!(l, IntentLabel::Navigation(_) | IntentLabel::Select(_)))
        .count();
    if navigation > 1 {
        out.push(format!("{navigation} navigation labels"));
    }
    for l in set {
        match l {
            IntentLabel::Select(0) => out.push("select(0)".to_string()),
            IntentLabel::TaskRequest { query } if query.trim().is_empty() => {
                out.push("task_request with empty query".to_string())
            }
            _ => {}
        }
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NluError {
    #[error("intent scorer failed: {0}")]
    Scorer(String),
}

/// Pluggable recognizer. Labels scoring at or above the threshold are kept.
pub trait IntentScorer: Send + Sync {
    fn score(&self, normalized: &str, state_key: &str) -> Result<Vec<(IntentLabel, f64)>, NluError>;
}

pub const SCORE_THRESHOLD: f64 = 0.5;

/// Lowercases, keeps letters, digits, apostrophes and `?`, collapses
/// whitespace, and strips leading fillers and trailing politeness.
pub fn normalize(text: &str, lexicon: &Lexicon) -> String {
    let mapped: String = text
        .chars()
        .map(|c| match c {
            '\u{2019}' | '\u{2018}' => '\'',
            c if c.is_alphanumeric() || c == '\'' || c == '?' => c,
            _ => ' ',
        })
        .flat_map(char::to_lowercase)
        .collect();
    let question = mapped.contains('?');
    let mut tokens: Vec<String> = mapped
        .split_whitespace()
        .map(|t| t.trim_matches(|c| c == '?' || c == '\'').to_string())
        .filter(|t| !t.is_empty())
        .collect();
    loop {
        let strip = |list: &[Vec<String>], lead: bool| {
            list.iter()
                .filter(|f| {
                    f.len() < tokens.len()
                        && if lead {
                            tokens[..f.len()] == f[..]
                        } else {
                            tokens[tokens.len() - f.len()..] == f[..]
                        }
                })
                .map(Vec::len)
                .max()
        };
        if let Some(n) = strip(&lexicon.fillers, true) {
            tokens.drain(..n);
        } else if let Some(n) = strip(&lexicon.trailing, false) {
            tokens.truncate(tokens.len() - n);
        } else {
            break;
        }
    }
    let mut out = tokens.join(" ");
    if question && !out.is_empty() {
        out.push('?');
    }
    out
}

/// Keeps labels the state can act on. Stop always survives; an empty
/// result becomes `{Neutral}`.
pub fn filter_by_state(
    labels: &IntentSet,
    state_key: &str,
    has_row: impl Fn(&str, &str) -> bool,
) -> IntentSet {
    let kept: IntentSet = labels
        .iter()
        .filter(|l| matches!(l, IntentLabel::Stop) || has_row(state_key, l.key()))
        .cloned()
        .collect();
    if kept.is_empty() {
        IntentSet::from([IntentLabel::Neutral])
    } else {
        kept
    }
}

/// Scorer plus normalization and thresholding.
pub struct Nlu {
    lexicon: Lexicon,
    scorer: Box<dyn IntentScorer>,
}

impl Nlu {
    pub fn new(lexicon: Lexicon, scorer: Box<dyn IntentScorer>) -> Self {
        Self { lexicon, scorer }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn normalize(&self, text: &str) -> String {
        normalize(text, &self.lexicon)
    }

    /// Labels before state filtering; `{Neutral}` when nothing clears the
    /// threshold.
    pub fn recognize(&self, text: &str, state_key: &str) -> Result<IntentSet, NluError> {
        let norm = self.normalize(text);
        let scored = self.scorer.score(&norm, state_key)?;
        let set: IntentSet = scored
            .into_iter()
            .filter(|(_, s)| *s >= SCORE_THRESHOLD)
            .map(|(l, _)| l)
            .collect();
        Ok(if set.is_empty() {
            IntentSet::from([IntentLabel::Neutral])
        } else {
            set
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil;

    #[test]
    fn normalization() {
        let lex = testutil::lexicon();
        assert_eq!(normalize("Um, NEXT please!", &lex), "next");
        assert_eq!(normalize("Alexa,   how much salt?", &lex), "how much salt?");
        assert_eq!(normalize("Can I freeze it? Thanks", &lex), "can i freeze it?");
        assert_eq!(normalize("what's up?", &lex), "what's up?");
        assert_eq!(normalize("please", &lex), "please");
        assert_eq!(normalize("", &lex), "");
        assert_eq!(normalize("It’s done", &lex), "it's done");
    }

    #[test]
    fn ordering_is_priority() {
        let set: IntentSet = [
            IntentLabel::Chat,
            IntentLabel::Stop,
            IntentLabel::Affirm,
            IntentLabel::Navigation(Direction::Next),
        ]
        .into_iter()
        .collect();
        let keys: Vec<&str> = set.iter().map(IntentLabel::key).collect();
        assert_eq!(keys, vec!["stop", "next", "chat", "affirm"]);
        let all: Vec<&str> = INTENT_KEYS.to_vec();
        let mut sorted = vec![
            IntentLabel::OutOfDomain,
            IntentLabel::Neutral,
            IntentLabel::Negate,
            IntentLabel::Affirm,
            IntentLabel::Chat,
            IntentLabel::Question,
            IntentLabel::PakRequest,
            IntentLabel::DetailRequest,
            IntentLabel::TaskRequest { query: String::new() },
            IntentLabel::Select(1),
            IntentLabel::Navigation(Direction::MoreResults),
            IntentLabel::Navigation(Direction::GoBack),
            IntentLabel::Navigation(Direction::Repeat),
            IntentLabel::Navigation(Direction::Previous),
            IntentLabel::Navigation(Direction::Next),
            IntentLabel::TaskComplete,
            IntentLabel::Stop,
        ];
        sorted.sort();
        assert_eq!(sorted.iter().map(IntentLabel::key).collect::<Vec<_>>(), all);
    }

    #[test]
    fn filter_rules() {
        let rows = |s: &str, i: &str| s == "exec.step" && i == "next";
        let set: IntentSet = [IntentLabel::Navigation(Direction::Next), IntentLabel::Chat].into();
        assert_eq!(keys(&filter_by_state(&set, "exec.step", rows)), ["next"].into());
        assert_eq!(keys(&filter_by_state(&set, "search.welcome", rows)), ["neutral"].into());
        let stop: IntentSet = [IntentLabel::Stop].into();
        assert_eq!(filter_by_state(&stop, "anything", rows), stop);
    }
}
