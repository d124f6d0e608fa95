use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{content_tokens, find_phrase, is_stopword, tokenize, Lemmatizer};

#[derive(Debug, Error)]
pub enum ChitChatError {
    #[error("chit-chat config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("aliens monologue must have exactly 5 parts, found {0}")]
    AliensParts(usize),
    #[error("chit-chat config: {0} must not be empty")]
    Empty(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Food,
    Wiki,
    Categories,
    Aliens,
    Transition,
    NeuralChat,
    Exit,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Category {
    pub words: Vec<String>,
    pub reply: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ChitChatConfig {
    pub chat_verbs: Vec<String>,
    pub continue_patterns: Vec<String>,
    pub return_patterns: Vec<String>,
    pub food: BTreeMap<String, String>,
    pub categories: BTreeMap<String, Category>,
    pub transition: String,
    pub neural: Vec<String>,
    pub neural_no_entity: Vec<String>,
    pub return_prompt: String,
    pub exit: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AliensMonologue {
    pub triggers: Vec<String>,
    pub parts: Vec<String>,
    pub finished: String,
}

impl AliensMonologue {
    pub const PARTS: usize = 5;

    pub fn from_json(json: &str) -> Result<Self, ChitChatError> {
        let m: AliensMonologue = serde_json::from_str(json)?;
        if m.parts.len() != Self::PARTS {
            return Err(ChitChatError::AliensParts(m.parts.len()));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct WikiEntry {
    pub entity: String,
    pub summary: String,
}

/// Conversation memory kept while the user chats.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChitChatState {
    pub turns: u32,
    pub entities: Vec<String>,
    pub current: Option<String>,
    /// Index of the next monologue part to deliver.
    pub aliens_next: usize,
    pub last: Option<Generator>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChitChatReply {
    pub text: String,
    pub generator: Generator,
    pub exit: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aliens_part: Option<usize>,
}

type Phrase = Vec<String>;

pub struct ChitChat {
    cfg: ChitChatConfig,
    aliens: AliensMonologue,
    lemmatizer: Lemmatizer,
    food: Vec<(Phrase, String)>,
    wiki: Vec<(Phrase, String)>,
    categories: Vec<(Vec<String>, String)>,
    alien_triggers: Vec<String>,
    continue_patterns: Vec<Phrase>,
    return_patterns: Vec<Phrase>,
    return_after: u32,
}

impl ChitChat {
    pub fn new(
        cfg: ChitChatConfig,
        aliens: AliensMonologue,
        wiki: Vec<WikiEntry>,
        lemmatizer: Lemmatizer,
        return_after: u32,
    ) -> Result<Self, ChitChatError> {
        if cfg.neural.is_empty() {
            return Err(ChitChatError::Empty("neural"));
        }
        if cfg.neural_no_entity.is_empty() {
            return Err(ChitChatError::Empty("neural_no_entity"));
        }
        let lem = |s: &str| -> Phrase {
            content_tokens(s).iter().map(|t| lemmatizer.lemma(t)).collect()
        };
        let mut food: Vec<(Phrase, String)> = cfg
            .food
            .iter()
            .map(|(k, v)| (lem(k), v.clone()))
            .filter(|(p, _)| !p.is_empty())
            .collect();
        food.sort_by_key(|e| std::cmp::Reverse(e.0.len()));
        let mut wiki: Vec<(Phrase, String)> = wiki
            .into_iter()
            .map(|w| (lem(&w.entity), w.summary))
            .filter(|(p, _)| !p.is_empty())
            .collect();
        wiki.sort_by_key(|e| std::cmp::Reverse(e.0.len()));
        let categories = cfg
            .categories
            .values()
            .map(|c| (c.words.iter().map(|w| lemmatizer.lemma(&w.to_lowercase())).collect(), c.reply.clone()))
            .collect();
        let alien_triggers = aliens.triggers.iter().map(|t| t.to_lowercase()).collect();
        let phrases = |v: &[String]| v.iter().map(|p| tokenize(p)).filter(|p| !p.is_empty()).collect();
        Ok(Self {
            continue_patterns: phrases(&cfg.continue_patterns),
            return_patterns: phrases(&cfg.return_patterns),
            cfg,
            aliens,
            lemmatizer,
            food,
            wiki,
            categories,
            alien_triggers,
            return_after,
        })
    }

    pub fn return_after(&self) -> u32 {
        self.return_after
    }

    pub fn aliens(&self) -> &AliensMonologue {
        &self.aliens
    }

    pub fn exit_text(&self, title: &str) -> String {
        Self::fill(&self.cfg.exit, "", "", title)
    }

    pub fn is_return_request(&self, utterance: &str) -> bool {
        let toks = tokenize(utterance);
        self.return_patterns.iter().any(|p| find_phrase(&toks, p).is_some())
    }

    /// Noun-ish phrases: maximal runs of content words, chat verbs excluded.
    pub fn entities(&self, utterance: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur: Vec<String> = Vec::new();
        for t in tokenize(utterance) {
            let skip = is_stopword(&t) || self.cfg.chat_verbs.contains(&t);
            if skip {
                if !cur.is_empty() {
                    out.push(cur.join(" "));
                    cur.clear();
                }
            } else {
                cur.push(t);
            }
        }
        if !cur.is_empty() {
            out.push(cur.join(" "));
        }
        out
    }

    /// Head noun of a title: lemma of its last content word.
    pub fn title_entity(&self, title: &str) -> Option<String> {
        content_tokens(title).last().map(|t| self.lemmatizer.lemma(t))
    }

    fn lemmas(&self, text: &str) -> Phrase {
        content_tokens(text).iter().map(|t| self.lemmatizer.lemma(t)).collect()
    }

    fn lookup<'a>(table: &'a [(Phrase, String)], lemmas: &[String]) -> Option<&'a String> {
        table
            .iter()
            .find(|(p, _)| find_phrase(lemmas, p).is_some())
            .map(|(_, v)| v)
    }

    fn fill(template: &str, entity: &str, previous: &str, title: &str) -> String {
        template
            .replace("{entity}", entity)
            .replace("{previous}", previous)
            .replace("{title}", title)
    }

    pub fn reply(
        &self,
        state: &ChitChatState,
        utterance: &str,
        title: &str,
    ) -> (ChitChatState, ChitChatReply) {
        let mut next = state.clone();
        if self.is_return_request(utterance) {
            next.last = Some(Generator::Exit);
            return (
                next,
                ChitChatReply {
                    text: Self::fill(&self.cfg.exit, "", "", title),
                    generator: Generator::Exit,
                    exit: true,
                    aliens_part: None,
                },
            );
        }
        next.turns += 1;

        let found = self.entities(utterance);
        let previous = next.current.clone();
        if let Some(newest) = found.last() {
            if next.current.as_deref() != Some(newest) {
                next.entities.push(newest.clone());
            }
            next.current = Some(newest.clone());
        } else if next.current.is_none() {
            next.current = self.title_entity(title);
        }
        let switched = !found.is_empty() && previous.is_some() && previous != next.current;

        let toks = tokenize(utterance);
        let lemmas = self.lemmas(utterance);
        let wants_more = self.continue_patterns.iter().any(|p| find_phrase(&toks, p).is_some());
        let mentions_aliens = toks.iter().any(|t| self.alien_triggers.contains(t));
        let entity = next.current.clone().unwrap_or_default();

        let mut aliens_part = None;
        let (generator, mut text) = if wants_more
            && state.last == Some(Generator::Aliens)
            && next.aliens_next < AliensMonologue::PARTS
        {
            aliens_part = Some(next.aliens_next + 1);
            next.aliens_next += 1;
            (Generator::Aliens, self.aliens.parts[next.aliens_next - 1].clone())
        } else if let Some(fact) = Self::lookup(&self.food, &lemmas) {
            (Generator::Food, fact.clone())
        } else if let Some(summary) = Self::lookup(&self.wiki, &lemmas) {
            (Generator::Wiki, summary.clone())
        } else if let Some((_, reply)) = self
            .categories
            .iter()
            .find(|(words, _)| lemmas.iter().any(|l| words.contains(l)))
        {
            (Generator::Categories, reply.clone())
        } else if mentions_aliens {
            if next.aliens_next < AliensMonologue::PARTS {
                aliens_part = Some(next.aliens_next + 1);
                next.aliens_next += 1;
                (Generator::Aliens, self.aliens.parts[next.aliens_next - 1].clone())
            } else {
                (Generator::Aliens, self.aliens.finished.clone())
            }
        } else if switched {
            let prev = previous.unwrap_or_default();
            (Generator::Transition, Self::fill(&self.cfg.transition, &entity, &prev, title))
        } else if !found.is_empty() {
            let t = &self.cfg.neural[next.turns as usize % self.cfg.neural.len()];
            (Generator::NeuralChat, Self::fill(t, &entity, "", title))
        } else {
            let pool = &self.cfg.neural_no_entity;
            (Generator::NeuralChat, pool[next.turns as usize % pool.len()].clone())
        };
        if next.turns >= self.return_after {
            text.push(' ');
            text.push_str(&Self::fill(&self.cfg.return_prompt, &entity, "", title));
        }
        next.last = Some(generator);
        (
            next,
            ChitChatReply {
                text,
                generator,
                exit: false,
                aliens_part,
            },
        )
    }
}
