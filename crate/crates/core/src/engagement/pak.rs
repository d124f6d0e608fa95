use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::domain::{Corpus, TaskDocument};
use crate::text::{content_tokens, Lemmatizer};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PakPair {
    pub keyword: String,
    pub question: String,
    pub answer: String,
}

impl PakPair {
    pub fn key(&self) -> (String, String) {
        (self.keyword.clone(), self.question.clone())
    }
}

#[derive(Deserialize)]
struct RawPak {
    #[serde(default)]
    keyword: String,
    #[serde(default)]
    question: String,
    #[serde(default)]
    answer: String,
}

/// "People also ask" pairs grouped by lemmatized keyword.
#[derive(Debug, Clone, Default)]
pub struct PakStore {
    by_keyword: BTreeMap<String, Vec<PakPair>>,
    skipped: usize,
    duplicates: usize,
}

impl PakStore {
    /// Loads JSONL records. Unparseable or incomplete lines are counted
    /// and skipped; repeated (keyword, question) pairs keep the first.
    pub fn from_jsonl(text: &str, lemmatizer: &Lemmatizer) -> Self {
        let mut store = Self::default();
        let mut seen = BTreeSet::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let Ok(raw) = serde_json::from_str::<RawPak>(line) else {
                store.skipped += 1;
                continue;
            };
            let keyword = normalize_keyword(&raw.keyword, lemmatizer);
            let question = raw.question.trim();
            let answer = raw.answer.trim();
            if keyword.is_empty() || question.is_empty() || answer.is_empty() {
                store.skipped += 1;
                continue;
            }
            if !seen.insert((keyword.clone(), question.to_lowercase())) {
                store.duplicates += 1;
                continue;
            }
            store.by_keyword.entry(keyword.clone()).or_default().push(PakPair {
                keyword,
                question: question.to_string(),
                answer: answer.to_string(),
            });
        }
        store
    }

    pub fn pairs(&self, keyword: &str) -> &[PakPair] {
        self.by_keyword.get(keyword).map_or(&[], Vec::as_slice)
    }

    pub fn keywords(&self) -> impl Iterator<Item = &str> {
        self.by_keyword.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.by_keyword.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_keyword.is_empty()
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }
}

fn normalize_keyword(raw: &str, lemmatizer: &Lemmatizer) -> String {
    content_tokens(raw)
        .iter()
        .map(|t| lemmatizer.lemma(t))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Picks which pair to offer while a task runs.
#[derive(Debug, Clone)]
pub struct PakSelector {
    store: PakStore,
    title_df: HashMap<String, usize>,
    lemmatizer: Lemmatizer,
    every: usize,
}

impl PakSelector {
    pub fn new(store: PakStore, corpus: &Corpus, lemmatizer: Lemmatizer, every: usize) -> Self {
        let mut title_df: HashMap<String, usize> = HashMap::new();
        for doc in corpus.iter() {
            let mut lemmas = title_lemmas(&doc.title, &lemmatizer);
            lemmas.sort();
            lemmas.dedup();
            for l in lemmas {
                *title_df.entry(l).or_default() += 1;
            }
        }
        Self {
            store,
            title_df,
            lemmatizer,
            every: every.max(1),
        }
    }

    pub fn store(&self) -> &PakStore {
        &self.store
    }

    pub fn every(&self) -> usize {
        self.every
    }

    /// Title words shared with at least one other title, in title order.
    pub fn keywords(&self, doc: &TaskDocument) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for l in title_lemmas(&doc.title, &self.lemmatizer) {
            if self.title_df.get(&l).copied().unwrap_or(0) >= 2 && !out.contains(&l) {
                out.push(l);
            }
        }
        out
    }

    pub fn is_offer_step(&self, cursor: usize) -> bool {
        cursor > 0 && cursor.is_multiple_of(self.every)
    }

    /// First pair not yet shown, walking the task keywords in order.
    pub fn offer(
        &self,
        doc: &TaskDocument,
        cursor: usize,
        shown: &BTreeSet<(String, String)>,
    ) -> Option<&PakPair> {
        if !self.is_offer_step(cursor) {
            return None;
        }
        self.first_unshown(doc, shown)
    }

    /// Like [`PakSelector::offer`] but ignores the step schedule.
    pub fn first_unshown(
        &self,
        doc: &TaskDocument,
        shown: &BTreeSet<(String, String)>,
    ) -> Option<&PakPair> {
        self.keywords(doc)
            .iter()
            .flat_map(|k| self.store.pairs(k))
            .find(|p| !shown.contains(&p.key()))
    }
}

fn title_lemmas(title: &str, lemmatizer: &Lemmatizer) -> Vec<String> {
    content_tokens(title).iter().map(|t| lemmatizer.lemma(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINES: &str = r#"
{"keyword": "soup", "question": "Q1?", "answer": "A1."}
{"keyword": "Soups", "question": "Q1?", "answer": "dup"}
{"keyword": "", "question": "Q2?", "answer": "A2."}
not json
{"keyword": "soup", "question": "Q3?", "answer": "A3."}
"#;

    #[test]
    fn loads_with_skips_and_dedup() {
        let s = PakStore::from_jsonl(LINES, &Lemmatizer::default());
        assert_eq!(s.len(), 2);
        assert_eq!(s.skipped(), 2);
        assert_eq!(s.duplicates(), 1);
        assert_eq!(s.pairs("soup")[1].question, "Q3?");
        assert!(s.pairs("nothing").is_empty());
    }
}
