//! Shared fixtures for unit tests.

use std::path::PathBuf;

use crate::domain::{load_corpus, Corpus};
use crate::safety::Blacklist;
use crate::search::{PreferenceLexicon, QueryExpander, SearchEngine, SearchParts, TrafficLights};
use crate::text::Lemmatizer;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(data_dir().join(rel)).unwrap()
}

pub fn corpus() -> Corpus {
    let dir = data_dir().join("corpus");
    Corpus::load_files(
        &[dir.join("recipes.jsonl"), dir.join("howto.jsonl")],
        crate::domain::DEFAULT_MAX_INSTRUCTION_WORDS,
    )
    .unwrap()
}

#[allow(dead_code)]
pub fn recipes_only() -> Corpus {
    load_corpus(data_dir().join("corpus/recipes.jsonl")).unwrap()
}

pub fn expander() -> QueryExpander {
    let lem = Lemmatizer::from_json(&read("config/lemmas.json")).unwrap();
    QueryExpander::new(lem, QueryExpander::nouns_from_text(&read("config/nouns.txt")))
}

pub fn engine() -> SearchEngine {
    let search: serde_json::Value = serde_json::from_str(&read("config/search.json")).unwrap();
    let cues = search["recipe_cues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    SearchEngine::new(
        &corpus(),
        SearchParts {
            expander: expander(),
            preferences: PreferenceLexicon::from_json(&read("config/prefs.json")).unwrap(),
            lights: TrafficLights::from_json(&read("config/nutrition_thresholds.json")).unwrap(),
            blacklist: Blacklist::from_text(&read("corpus/blacklist.txt")),
            recipe_cues: cues,
            ..SearchParts::default()
        },
    )
}

pub fn qa_router() -> crate::qa::QaRouter {
    use crate::qa::{FixtureOod, OodEntry, QaConfig, QaRouter};
    let lem = Lemmatizer::from_json(&read("config/lemmas.json")).unwrap();
    let cfg = QaConfig::from_json(&read("config/qa_config.json")).unwrap();
    let entries: Vec<OodEntry> = read("corpus/ooc_fixture.jsonl")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let ood = FixtureOod::new(entries, lem.clone(), cfg.ooc_threshold);
    let subs = crate::domain::load_substitutes(data_dir().join("corpus/substitutes.jsonl")).unwrap();
    QaRouter::new(cfg, &corpus(), subs, lem, Box::new(ood))
}

pub fn chitchat() -> crate::engagement::ChitChat {
    use crate::engagement::{AliensMonologue, ChitChat, WikiEntry};
    let lem = Lemmatizer::from_json(&read("config/lemmas.json")).unwrap();
    let wiki: Vec<WikiEntry> = read("corpus/wiki_summaries.jsonl")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    ChitChat::new(
        serde_json::from_str(&read("config/chitchat.json")).unwrap(),
        AliensMonologue::from_json(&read("config/aliens_monologue.json")).unwrap(),
        wiki,
        lem,
        3,
    )
    .unwrap()
}

pub fn lexicon() -> crate::nlu::Lexicon {
    crate::nlu::Lexicon::from_json(&read("config/nlu_lexicon.json")).unwrap()
}

pub fn recognizer() -> crate::nlu::RuleRecognizer {
    crate::nlu::RuleRecognizer::new(
        lexicon(),
        PreferenceLexicon::from_json(&read("config/prefs.json")).unwrap(),
    )
}
