//! Question answering during a task.
//!
//! Questions are routed in a fixed order: substitutions and ingredient
//! amounts (recipes only), the task FAQ, reading the recent steps, and
//! finally the open-domain backend.

pub mod eval;
mod ood;
mod tfidf;

pub use ood::{DisabledOod, FixtureOod, OodBackend, OodEntry, OodError};
pub use tfidf::{cosine, SparseVec, TfIdf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Corpus, SubstituteTable, TaskDocument};
use crate::text::{sentence_join, split_sentences, tokenize, Lemmatizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QaType {
    #[serde(rename = "MRC")]
    Mrc,
    #[serde(rename = "OOC")]
    Ooc,
    #[serde(rename = "FAQ")]
    Faq,
    Ingredient,
    Substitute,
}

impl QaType {
    pub const ALL: [QaType; 5] = [
        QaType::Mrc,
        QaType::Ooc,
        QaType::Faq,
        QaType::Ingredient,
        QaType::Substitute,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QaType::Mrc => "MRC",
            QaType::Ooc => "OOC",
            QaType::Faq => "FAQ",
            QaType::Ingredient => "Ingredient",
            QaType::Substitute => "Substitute",
        }
    }
}

impl std::str::FromStr for QaType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QaType::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown QA type {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaAnswer {
    pub qtype: QaType,
    pub text: String,
    /// Step the MRC answer was read from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    /// FAQ entry id, `"{task}#faq{n}"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faq_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct QaConfig {
    pub window: usize,
    pub faq_threshold: f64,
    pub mrc_threshold: f64,
    pub sentence_threshold: f64,
    pub ooc_threshold: f64,
    pub substitute_markers: Vec<String>,
    pub ingredient_cues: Vec<String>,
    pub fallback: String,
    pub not_in_recipe: String,
    pub no_substitute: String,
}

impl Default for QaConfig {
    fn default() -> Self {
        Self {
            window: 2,
            faq_threshold: 0.55,
            mrc_threshold: 0.25,
            sentence_threshold: 0.2,
            ooc_threshold: 0.5,
            substitute_markers: vec!["instead of".into(), "substitute".into()],
            ingredient_cues: vec!["how much".into(), "how many".into()],
            fallback: "I don't know that one, but we can keep going with the task.".into(),
            not_in_recipe: "That ingredient isn't in this recipe.".into(),
            no_substitute: "Sorry, I don't know a good substitute for {ingredient}.".into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum QaConfigError {
    #[error("qa config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("qa config: thresholds must lie in [0, 1]")]
    Threshold,
}

impl QaConfig {
    pub fn from_json(json: &str) -> Result<Self, QaConfigError> {
        let cfg: QaConfig = serde_json::from_str(json)?;
        let ok = [
            cfg.faq_threshold,
            cfg.mrc_threshold,
            cfg.sentence_threshold,
            cfg.ooc_threshold,
        ]
        .iter()
        .all(|t| (0.0..=1.0).contains(t));
        if ok {
            Ok(cfg)
        } else {
            Err(QaConfigError::Threshold)
        }
    }
}

/// 1-based inclusive step range read by MRC for a cursor.
pub fn window_range(cursor: usize, n: usize, len: usize) -> std::ops::RangeInclusive<usize> {
    let hi = cursor.clamp(1, len.max(1));
    hi.saturating_sub(n).max(1)..=hi
}

/// Concatenated instructions of the steps inside the window.
pub fn window_text(task: &TaskDocument, cursor: usize, n: usize) -> String {
    window_range(cursor, n, task.steps.len())
        .filter_map(|i| task.step(i))
        .map(|s| s.instruction.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

type Phrase = Vec<String>;

pub struct QaRouter {
    cfg: QaConfig,
    lemmatizer: Lemmatizer,
    steps_model: TfIdf,
    faq_model: TfIdf,
    substitutes: SubstituteTable,
    substitute_keys: Vec<(Phrase, String)>,
    ingredient_vocab: Vec<Phrase>,
    markers: Vec<Phrase>,
    cues: Vec<Phrase>,
    ood: Box<dyn OodBackend>,
}

fn phrases(list: &[String]) -> Vec<Phrase> {
    list.iter().map(|s| tokenize(s)).filter(|p| !p.is_empty()).collect()
}

fn contains_phrase(tokens: &[String], phrase: &[String]) -> bool {
    crate::text::find_phrase(tokens, phrase).is_some()
}

impl QaRouter {
    pub fn new(
        cfg: QaConfig,
        corpus: &Corpus,
        substitutes: SubstituteTable,
        lemmatizer: Lemmatizer,
        ood: Box<dyn OodBackend>,
    ) -> Self {
        let mut sentences = Vec::new();
        for doc in corpus.iter() {
            for step in &doc.steps {
                sentences.extend(split_sentences(&step.text));
            }
        }
        let steps_model = TfIdf::fit(sentences, lemmatizer.clone());
        let mut faq_texts: Vec<&str> = corpus.iter().map(|d| d.title.as_str()).collect();
        for doc in corpus.iter() {
            faq_texts.extend(doc.faq.iter().map(|f| f.question.as_str()));
        }
        let faq_model = TfIdf::fit(faq_texts, lemmatizer.clone());

        let lem = |p: &str| -> Phrase { tokenize(p).iter().map(|t| lemmatizer.lemma(t)).collect() };
        let mut substitute_keys: Vec<(Phrase, String)> = substitutes
            .ingredients()
            .map(|i| (lem(i), i.to_string()))
            .collect();
        substitute_keys.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        let mut ingredient_vocab: Vec<Phrase> = corpus
            .iter()
            .flat_map(|d| d.ingredients.iter().map(|i| lem(&i.name)))
            .chain(substitute_keys.iter().map(|(p, _)| p.clone()))
            .filter(|p| !p.is_empty())
            .collect();
        ingredient_vocab.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        ingredient_vocab.dedup();

        Self {
            markers: phrases(&cfg.substitute_markers),
            cues: phrases(&cfg.ingredient_cues),
            cfg,
            lemmatizer,
            steps_model,
            faq_model,
            substitutes,
            substitute_keys,
            ingredient_vocab,
            ood,
        }
    }

    pub fn config(&self) -> &QaConfig {
        &self.cfg
    }

    fn lemmas(&self, text: &str) -> Vec<String> {
        tokenize(text).iter().map(|t| self.lemmatizer.lemma(t)).collect()
    }

    /// Longest non-overlapping matches of `vocab` in `tokens`, left to right.
    fn scan<'v>(tokens: &[String], vocab: impl Iterator<Item = &'v Phrase> + Clone) -> Vec<&'v Phrase> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let hit = vocab
                .clone()
                .filter(|p| i + p.len() <= tokens.len() && tokens[i..i + p.len()] == p[..])
                .max_by_key(|p| p.len());
            match hit {
                Some(p) => {
                    out.push(p);
                    i += p.len();
                }
                None => i += 1,
            }
        }
        out
    }

    pub fn answer(&self, question: &str, task: &TaskDocument, cursor: usize) -> QaAnswer {
        let raw_tokens = tokenize(question);
        let lemmas = self.lemmas(question);
        if task.is_recipe() {
            if self.markers.iter().any(|m| contains_phrase(&raw_tokens, m)) {
                return self.substitute(&lemmas, task);
            }
            if let Some(a) = self.ingredient(&raw_tokens, &lemmas, task) {
                return a;
            }
        }
        if let Some(a) = self.faq(question, task) {
            return a;
        }
        if let Some(a) = self.mrc(question, task, cursor) {
            return a;
        }
        self.ooc(question)
    }

    fn substitute(&self, lemmas: &[String], task: &TaskDocument) -> QaAnswer {
        let found = Self::scan(lemmas, self.substitute_keys.iter().map(|(p, _)| p))
            .into_iter()
            .next()
            .and_then(|p| self.substitute_keys.iter().find(|(k, _)| k == p))
            .and_then(|(_, name)| self.substitutes.get(name));
        let text = match found {
            Some(entry) => {
                let subs = match entry.substitutes.as_slice() {
                    [] => String::new(),
                    [one] => one.clone(),
                    [init @ .., last] => format!("{} or {}", init.join(", "), last),
                };
                format!("You can use {subs} instead of {}.", entry.ingredient)
            }
            None => {
                let named = task
                    .ingredients
                    .iter()
                    .find(|i| contains_phrase(lemmas, &self.lemmas(&i.name)))
                    .map(|i| i.name.clone())
                    .unwrap_or_else(|| "that".to_string());
                self.cfg.no_substitute.replace("{ingredient}", &named)
            }
        };
        QaAnswer {
            qtype: QaType::Substitute,
            text,
            step: None,
            faq_id: None,
        }
    }

    fn ingredient(&self, raw: &[String], lemmas: &[String], task: &TaskDocument) -> Option<QaAnswer> {
        if !self.cues.iter().any(|c| contains_phrase(raw, c)) {
            return None;
        }
        let recipe: Vec<(Phrase, &crate::domain::Ingredient)> = task
            .ingredients
            .iter()
            .map(|i| (self.lemmas(&i.name), i))
            .collect();
        let describe = |i: &crate::domain::Ingredient| match &i.quantity {
            Some(q) => format!("{q} {}", i.name),
            None => i.name.clone(),
        };
        let direct = Self::scan(lemmas, recipe.iter().map(|(p, _)| p));
        let mut hits: Vec<&crate::domain::Ingredient> = direct
            .iter()
            .filter_map(|p| recipe.iter().find(|(r, _)| r == *p).map(|(_, i)| *i))
            .collect();
        let mut mentioned = !hits.is_empty();
        if hits.is_empty() {
            let global = Self::scan(lemmas, self.ingredient_vocab.iter());
            mentioned = !global.is_empty();
            for g in global {
                for (r, i) in &recipe {
                    if contains_phrase(r, g) && !hits.iter().any(|h| std::ptr::eq(*h, *i)) {
                        hits.push(i);
                    }
                }
            }
        }
        let text = if !hits.is_empty() {
            let items: Vec<String> = hits.into_iter().map(describe).collect();
            format!("You need {}.", sentence_join(&items))
        } else if mentioned {
            self.cfg.not_in_recipe.clone()
        } else if raw.iter().any(|t| t == "ingredient" || t == "ingredients") {
            let items: Vec<String> = task.ingredients.iter().map(describe).collect();
            format!("You need {}.", sentence_join(&items))
        } else {
            return None;
        };
        Some(QaAnswer {
            qtype: QaType::Ingredient,
            text,
            step: None,
            faq_id: None,
        })
    }

    fn faq(&self, question: &str, task: &TaskDocument) -> Option<QaAnswer> {
        let q = self.faq_model.embed(question);
        if q.is_empty() {
            return None;
        }
        let mut best: Option<(f64, usize)> = None;
        for (n, pair) in task.faq.iter().enumerate() {
            let s = cosine(&q, &self.faq_model.embed(&pair.question));
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, n));
            }
        }
        let (score, n) = best?;
        (score >= self.cfg.faq_threshold).then(|| QaAnswer {
            qtype: QaType::Faq,
            text: task.faq[n].answer.clone(),
            step: None,
            faq_id: Some(format!("{}#faq{}", task.id, n + 1)),
        })
    }

    fn mrc(&self, question: &str, task: &TaskDocument, cursor: usize) -> Option<QaAnswer> {
        let q = self.steps_model.terms(question);
        if q.is_empty() {
            return None;
        }
        let window = window_text(task, cursor, self.cfg.window);
        if self.steps_model.overlap(&q, &window) < self.cfg.mrc_threshold {
            return None;
        }
        let mut best: Option<(f64, usize, &str)> = None;
        for idx in window_range(cursor, self.cfg.window, task.steps.len()) {
            let Some(step) = task.step(idx) else { continue };
            for sentence in split_sentences(&step.instruction) {
                let s = self.steps_model.overlap(&q, sentence);
                let better = match best {
                    None => true,
                    Some((b, bi, _)) => s > b || (s == b && idx > bi),
                };
                if better {
                    best = Some((s, idx, sentence));
                }
            }
        }
        let (score, idx, sentence) = best?;
        (score >= self.cfg.sentence_threshold).then(|| QaAnswer {
            qtype: QaType::Mrc,
            text: sentence.to_string(),
            step: Some(idx),
            faq_id: None,
        })
    }

    fn ooc(&self, question: &str) -> QaAnswer {
        let text = match self.ood.answer(question) {
            Ok(Some(a)) => a,
            Ok(None) => self.cfg.fallback.clone(),
            Err(e) => {
                tracing::debug!(error = %e, "open-domain backend failed");
                self.cfg.fallback.clone()
            }
        };
        QaAnswer {
            qtype: QaType::Ooc,
            text,
            step: None,
            faq_id: None,
        }
    }
}
