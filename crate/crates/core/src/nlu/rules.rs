use std::collections::{BTreeMap, HashMap, HashSet};

use regex::Regex;
use serde::Deserialize;
use thiserror::Error;

use crate::search::PreferenceLexicon;
use crate::text::{is_stopword, tokenize};

use super::{Direction, IntentLabel, IntentScorer, IntentSet, NluError};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("nlu lexicon: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("nlu lexicon: bad pattern {pattern:?} in {group}: {source}")]
    Regex {
        group: String,
        pattern: String,
        #[source]
        source: regex::Error,
    },
    #[error("nlu lexicon: pattern group {0} is required")]
    MissingGroup(&'static str),
    #[error("nlu lexicon: {group} pattern {pattern:?} has no named group {name}")]
    MissingCapture {
        group: &'static str,
        pattern: String,
        name: &'static str,
    },
}

#[derive(Deserialize)]
struct RawLexicon {
    fillers: Vec<String>,
    trailing: Vec<String>,
    commands: BTreeMap<String, Vec<String>>,
    patterns: BTreeMap<String, Vec<String>>,
    sentiment: BTreeMap<String, Vec<String>>,
    question_words: Vec<String>,
    aux_verbs: Vec<String>,
    greetings: Vec<String>,
    ordinals: BTreeMap<String, usize>,
}

/// Compiled word lists and patterns for the rule recognizer.
#[derive(Debug, Clone)]
pub struct Lexicon {
    pub fillers: Vec<Vec<String>>,
    pub trailing: Vec<Vec<String>>,
    stop: HashSet<String>,
    complete: HashSet<String>,
    navigation: Vec<(Direction, Vec<Regex>)>,
    select: Vec<Regex>,
    strong: Vec<Regex>,
    weak: Vec<Regex>,
    detail: Vec<Regex>,
    pak: Vec<Regex>,
    complete_patterns: Vec<Regex>,
    chat: Vec<Regex>,
    sentiment: Vec<(Vec<String>, IntentLabel)>,
    question_words: HashSet<String>,
    aux_verbs: HashSet<String>,
    greetings: HashSet<String>,
    ordinals: HashMap<String, usize>,
}

fn phrase_list(v: &[String]) -> Vec<Vec<String>> {
    v.iter().map(|s| tokenize(s)).filter(|p| !p.is_empty()).collect()
}

fn norm_set(v: &[String]) -> HashSet<String> {
    v.iter().map(|s| tokenize(s).join(" ")).collect()
}

impl Lexicon {
    pub fn from_json(json: &str) -> Result<Self, LexiconError> {
        let raw: RawLexicon = serde_json::from_str(json)?;
        let compile = |group: &'static str| -> Result<Vec<Regex>, LexiconError> {
            let list = raw.patterns.get(group).ok_or(LexiconError::MissingGroup(group))?;
            list.iter()
                .map(|p| {
                    Regex::new(p).map_err(|source| LexiconError::Regex {
                        group: group.to_string(),
                        pattern: p.clone(),
                        source,
                    })
                })
                .collect()
        };
        let require = |group: &'static str, res: &[Regex], name: &'static str| {
            for r in res {
                if !r.capture_names().any(|n| n == Some(name)) {
                    return Err(LexiconError::MissingCapture {
                        group,
                        pattern: r.as_str().to_string(),
                        name,
                    });
                }
            }
            Ok(())
        };
        let mut navigation = Vec::new();
        for d in Direction::ALL {
            navigation.push((d, compile(d.key())?));
        }
        let select = compile("select")?;
        require("select", &select, "n")?;
        let strong = compile("task_request_strong")?;
        require("task_request_strong", &strong, "q")?;
        let weak = compile("task_request_weak")?;
        require("task_request_weak", &weak, "q")?;

        let mut sentiment = Vec::new();
        for (key, label) in [
            ("affirm", IntentLabel::Affirm),
            ("negate", IntentLabel::Negate),
            ("neutral", IntentLabel::Neutral),
        ] {
            for p in phrase_list(raw.sentiment.get(key).map_or(&[][..], Vec::as_slice)) {
                sentiment.push((p, label.clone()));
            }
        }
        sentiment.sort_by_key(|e| std::cmp::Reverse(e.0.len()));
        let commands = |k: &str| norm_set(raw.commands.get(k).map_or(&[][..], Vec::as_slice));

        Ok(Self {
            fillers: phrase_list(&raw.fillers),
            trailing: phrase_list(&raw.trailing),
            stop: commands("stop"),
            complete: commands("task_complete"),
            navigation,
            select,
            strong,
            weak,
            detail: compile("detail_request")?,
            pak: compile("pak_request")?,
            complete_patterns: compile("task_complete")?,
            chat: compile("chat")?,
            sentiment,
            question_words: raw.question_words.into_iter().collect(),
            aux_verbs: raw.aux_verbs.into_iter().collect(),
            greetings: norm_set(&raw.greetings),
            ordinals: raw.ordinals.into_iter().collect(),
        })
    }

    pub fn ordinal(&self, word: &str) -> Option<usize> {
        self.ordinals.get(word).copied()
    }
}

/// Deterministic rule-based recognizer.
#[derive(Debug, Clone)]
pub struct RuleRecognizer {
    lexicon: Lexicon,
    preferences: PreferenceLexicon,
}

fn any_match(res: &[Regex], text: &str) -> bool {
    res.iter().any(|r| r.is_match(text))
}

impl RuleRecognizer {
    pub fn new(lexicon: Lexicon, preferences: PreferenceLexicon) -> Self {
        Self {
            lexicon,
            preferences,
        }
    }

    /// Earliest navigation match; the longest wins among equal starts.
    fn navigation(&self, text: &str) -> Option<(usize, Direction)> {
        let mut best: Option<(usize, usize, Direction)> = None;
        for (dir, res) in &self.lexicon.navigation {
            for r in res {
                if let Some(m) = r.find(text) {
                    let cand = (m.start(), usize::MAX - m.len(), *dir);
                    if best.is_none_or(|b| (cand.0, cand.1) < (b.0, b.1)) {
                        best = Some(cand);
                    }
                }
            }
        }
        best.map(|b| (b.0, b.2))
    }

    fn select(&self, text: &str) -> Option<(usize, usize)> {
        self.lexicon.select.iter().filter_map(|r| r.captures(text)).find_map(|c| {
            let start = c.get(0).map_or(0, |m| m.start());
            c.name("n")
                .and_then(|m| self.lexicon.ordinal(m.as_str()))
                .map(|k| (start, k))
        })
    }

    fn task_query(&self, res: &[Regex], text: &str) -> Option<String> {
        for r in res {
            let Some(c) = r.captures(text) else { continue };
            let q = c.name("q").map_or("", |m| m.as_str()).trim();
            let informative = tokenize(q)
                .iter()
                .any(|t| !is_stopword(t) && self.lexicon.ordinal(t).is_none());
            if informative {
                return Some(q.to_string());
            }
        }
        None
    }

    /// Sentiment label and whether its phrase spans the whole utterance.
    fn sentiment(&self, tokens: &[String]) -> Option<(IntentLabel, bool)> {
        let starts: Vec<usize> = if tokens.len() <= 3 {
            (0..tokens.len()).collect()
        } else {
            vec![0]
        };
        for i in starts {
            let hit = self
                .lexicon
                .sentiment
                .iter()
                .find(|(p, _)| i + p.len() <= tokens.len() && tokens[i..i + p.len()] == p[..]);
            if let Some((p, label)) = hit {
                return Some((label.clone(), i == 0 && p.len() == tokens.len()));
            }
        }
        None
    }

    pub fn recognize(&self, normalized: &str, state_key: &str) -> IntentSet {
        let asked = normalized.ends_with('?');
        let plain = normalized.trim_end_matches('?').trim();
        let tokens: Vec<String> = plain.split_whitespace().map(str::to_string).collect();
        let phase = state_key.split('.').next().unwrap_or("");
        let lex = &self.lexicon;
        let mut labels = IntentSet::new();
        if plain.is_empty() {
            return IntentSet::from([IntentLabel::OutOfDomain]);
        }

        if lex.stop.contains(plain) {
            labels.insert(IntentLabel::Stop);
        }
        if lex.complete.contains(plain) || any_match(&lex.complete_patterns, plain) {
            labels.insert(IntentLabel::TaskComplete);
        }
        // Select is a navigation move too: the earlier mention wins.
        match (self.navigation(plain), self.select(plain)) {
            (Some((n, _)), Some((s, k))) if s < n => {
                labels.insert(IntentLabel::Select(k));
            }
            (Some((_, d)), _) => {
                labels.insert(IntentLabel::Navigation(d));
            }
            (None, Some((_, k))) => {
                labels.insert(IntentLabel::Select(k));
            }
            (None, None) => {}
        }
        if any_match(&lex.detail, plain) {
            labels.insert(IntentLabel::DetailRequest);
        }
        if any_match(&lex.pak, plain) {
            labels.insert(IntentLabel::PakRequest);
        }
        let command = !labels.is_empty();

        let preference = state_key == "search.clarify" && self.preferences.parse(plain).is_some();
        if preference {
            labels.insert(IntentLabel::Affirm);
        }
        if !command && !preference {
            let query = self.task_query(&lex.strong, plain).or_else(|| {
                (phase == "search")
                    .then(|| self.task_query(&lex.weak, plain))
                    .flatten()
            });
            if let Some(query) = query {
                labels.insert(IntentLabel::TaskRequest { query });
            }
        }
        let chat = any_match(&lex.chat, plain) || (state_key == "exec.chitchat" && !command);
        if chat {
            labels.insert(IntentLabel::Chat);
        }
        let mut whole_sentiment = false;
        if !preference {
            if let Some((s, whole)) = self.sentiment(&tokens) {
                labels.insert(s);
                whole_sentiment = whole;
            }
        }
        let requested = labels.iter().any(|l| matches!(l, IntentLabel::TaskRequest { .. }));
        let first = tokens.first().map(String::as_str).unwrap_or("");
        if !command
            && !requested
            && !chat
            && !whole_sentiment
            && (asked || lex.question_words.contains(first) || lex.aux_verbs.contains(first))
        {
            labels.insert(IntentLabel::Question);
        }

        if labels.is_empty() {
            let content = tokens.iter().any(|t| !is_stopword(t));
            if lex.greetings.contains(plain) {
                labels.insert(IntentLabel::OutOfDomain);
            } else if phase == "search" && content {
                labels.insert(IntentLabel::TaskRequest {
                    query: plain.to_string(),
                });
            } else {
                labels.insert(IntentLabel::OutOfDomain);
            }
        }
        labels
    }
}

impl IntentScorer for RuleRecognizer {
    fn score(&self, normalized: &str, state_key: &str) -> Result<Vec<(IntentLabel, f64)>, NluError> {
        Ok(self
            .recognize(normalized, state_key)
            .into_iter()
            .map(|l| (l, 1.0))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlu::{keys, normalize};
    use crate::testutil;

    fn rec(text: &str, state: &str) -> Vec<&'static str> {
        let r = testutil::recognizer();
        let norm = normalize(text, &testutil::lexicon());
        keys(&r.recognize(&norm, state)).into_iter().collect()
    }

    #[test]
    fn commands() {
        assert_eq!(rec("stop", "exec.step"), vec!["stop"]);
        assert_eq!(rec("Um, next please", "exec.step"), vec!["next"]);
        assert_eq!(rec("go back a step", "exec.step"), vec!["previous"]);
        assert_eq!(rec("go back", "exec.step"), vec!["go_back"]);
        assert_eq!(rec("next page", "search.results"), vec!["more_results"]);
        assert_eq!(rec("can you repeat that", "exec.step"), vec!["repeat"]);
    }

    #[test]
    fn stop_needs_whole_utterance() {
        assert!(!rec("when do i stop stirring", "exec.step").contains(&"stop"));
    }

    #[test]
    fn select_ordinals() {
        let r = testutil::recognizer();
        let lex = testutil::lexicon();
        for (t, k) in [("select 1", 1), ("the first one", 1), ("number two", 2), ("3", 3), ("let's do the second one", 2)] {
            let got = r.recognize(&normalize(t, &lex), "search.results");
            assert!(got.contains(&IntentLabel::Select(k)), "{t}: {got:?}");
        }
    }

    #[test]
    fn task_requests() {
        let r = testutil::recognizer();
        let lex = testutil::lexicon();
        let got = r.recognize(&normalize("Find a chicken soup recipe", &lex), "search.welcome");
        assert!(got.contains(&IntentLabel::TaskRequest {
            query: "a chicken soup recipe".into()
        }));
        assert_eq!(rec("how do i tie a tie", "search.welcome"), vec!["task_request"]);
        assert_eq!(rec("how do i tie a tie", "exec.step"), vec!["question"]);
        assert_eq!(rec("pasta", "search.welcome"), vec!["task_request"]);
        assert_eq!(rec("show me more", "exec.step"), vec!["more_results"]);
    }

    #[test]
    fn sentiment_rules() {
        assert_eq!(rec("yes", "prep.overview"), vec!["affirm"]);
        assert_eq!(rec("nope", "prep.overview"), vec!["negate"]);
        assert_eq!(rec("doesn't matter", "search.clarify"), vec!["negate"]);
        assert_eq!(rec("maybe", "exec.pak_offer"), vec!["neutral"]);
        assert_eq!(rec("i think yes", "exec.pak_offer"), vec!["affirm"]);
        // sentiment word late in a long utterance does not count
        assert!(!rec("could you tell me if that is right", "exec.step").contains(&"affirm"));
    }

    #[test]
    fn clarify_preferences_affirm() {
        assert_eq!(rec("low fat please", "search.clarify"), vec!["affirm"]);
        assert_eq!(rec("something healthy", "search.clarify"), vec!["affirm"]);
    }

    #[test]
    fn questions_and_chat() {
        assert_eq!(rec("how much salt do i need", "exec.step"), vec!["question"]);
        assert_eq!(rec("is the oven hot enough?", "exec.step"), vec!["question"]);
        assert_eq!(rec("do you like dogs", "exec.step"), vec!["chat"]);
        assert_eq!(rec("tell me about aliens", "exec.step"), vec!["chat"]);
        assert_eq!(rec("what's next", "exec.step"), vec!["next"]);
        assert_eq!(rec("tell me more", "exec.step"), vec!["chat", "detail_request"]);
        assert_eq!(rec("skateboarding", "exec.chitchat"), vec!["chat"]);
    }

    #[test]
    fn fallbacks() {
        assert_eq!(rec("hello", "search.welcome"), vec!["out_of_domain"]);
        assert_eq!(rec("purple elephant dance", "exec.step"), vec!["out_of_domain"]);
        assert_eq!(rec("", "exec.step"), vec!["out_of_domain"]);
    }
}
