//! Loads every module once and runs one dialogue turn at a time:
//! safety check, intent recognition, transition, composition.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Settings;
use crate::dm::{self, DialogueState, DmContext, DmError, Edge, HelpEvent, Recommendations, Responder, Sub, TableError, TransitionTable};
use crate::domain::{load_substitutes, Corpus, CorpusError};
use crate::engagement::{AliensMonologue, ChitChat, ChitChatError, PakSelector, PakStore, WikiEntry};
use crate::nlu::{self, IntentScorer, Lexicon, LexiconError, Nlu, NluError, RuleRecognizer};
use crate::qa::{FixtureOod, OodBackend, OodEntry, QaConfig, QaConfigError, QaRouter};
use crate::response::{BotResponse, Composer, HelpTemplates, TemplateError, Templates};
use crate::safety::Blacklist;
use crate::search::{Bm25, NutritionError, PreferenceLexicon, QueryExpander, Reranker, SearchEngine, SearchParts, TrafficLights};
use crate::text::Lemmatizer;
use crate::Score;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Qa(#[from] QaConfigError),
    #[error(transparent)]
    ChitChat(#[from] ChitChatError),
    #[error(transparent)]
    Templates(#[from] TemplateError),
    #[error(transparent)]
    Nutrition(#[from] NutritionError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum TurnError {
    #[error("session is closed")]
    Closed,
    #[error(transparent)]
    Nlu(#[from] NluError),
    #[error(transparent)]
    Dm(#[from] DmError),
    #[error("transition produced an invalid state: {0}")]
    InvalidState(String),
}

fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, LoadError> {
    serde_json::from_str(&read(path)?).map_err(|source| LoadError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, LoadError> {
    read(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|source| LoadError::Json {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct SearchFile {
    #[serde(default)]
    recipe_cues: Vec<String>,
}

/// Immutable per-process state shared by every session.
pub struct Resources {
    pub settings: Settings,
    pub corpus: Corpus,
    pub search: SearchEngine<Score>,
    pub qa: QaRouter,
    pub pak: PakSelector,
    pub chitchat: ChitChat,
    pub table: TransitionTable,
    pub recommendations: Recommendations,
    pub nlu: Nlu,
    pub templates: Templates,
    pub help: HelpTemplates,
    pub blacklist: Blacklist,
}

impl Resources {
    pub fn load(settings: &Settings) -> Result<Self, LoadError> {
        let cfg = &settings.paths.config_dir;
        let data = &settings.paths.corpus_dir;
        let corpus = Corpus::load_files(
            &[data.join("recipes.jsonl"), data.join("howto.jsonl")],
            settings.steps.max_words,
        )?;
        let lemmatizer = Lemmatizer::from_json(&read(&cfg.join("lemmas.json"))?).map_err(|source| LoadError::Json {
            path: cfg.join("lemmas.json"),
            source,
        })?;
        let prefs_path = cfg.join("prefs.json");
        let preferences = PreferenceLexicon::from_json(&read(&prefs_path)?)?;
        let lights = TrafficLights::from_json(&read(&cfg.join("nutrition_thresholds.json"))?)?;
        let blacklist = Blacklist::from_text(&read(&data.join("blacklist.txt"))?);
        let search_file: SearchFile = json(&cfg.join("search.json"))?;
        let recommendations: Recommendations = json(&cfg.join("search.json"))?;
        let expander = QueryExpander::new(
            lemmatizer.clone(),
            QueryExpander::nouns_from_text(&read(&cfg.join("nouns.txt"))?),
        );
        let search = SearchEngine::new(
            &corpus,
            SearchParts {
                expander,
                preferences: preferences.clone(),
                lights: lights.clone(),
                blacklist: blacklist.clone(),
                recipe_cues: search_file.recipe_cues,
                bm25: Bm25::new(settings.search.k1, settings.search.b),
                top_n: settings.search.top_n,
            },
        );

        let qa_cfg = QaConfig::from_json(&read(&cfg.join("qa_config.json"))?)?;
        let ood_entries: Vec<OodEntry> = jsonl(&data.join("ooc_fixture.jsonl"))?;
        let ood: Box<dyn OodBackend> = Box::new(FixtureOod::new(ood_entries, lemmatizer.clone(), qa_cfg.ooc_threshold));
        let subs = load_substitutes(data.join("substitutes.jsonl"))?;
        let qa = QaRouter::new(qa_cfg, &corpus, subs, lemmatizer.clone(), ood);

        let store = PakStore::from_jsonl(&read(&data.join("pak.jsonl"))?, &lemmatizer);
        if store.skipped() > 0 || store.duplicates() > 0 {
            tracing::warn!(
                "pak store: skipped {} malformed and {} duplicate records",
                store.skipped(),
                store.duplicates()
            );
        }
        let pak = PakSelector::new(store, &corpus, lemmatizer.clone(), settings.pak.every);

        let wiki: Vec<WikiEntry> = jsonl(&data.join("wiki_summaries.jsonl"))?;
        let chitchat = ChitChat::new(
            json(&cfg.join("chitchat.json"))?,
            AliensMonologue::from_json(&read(&cfg.join("aliens_monologue.json"))?)?,
            wiki,
            lemmatizer,
            settings.chitchat.return_prompt_after,
        )?;

        let table = TransitionTable::from_toml(&read(&cfg.join("transitions.toml"))?)?;
        let lexicon = Lexicon::from_json(&read(&cfg.join("nlu_lexicon.json"))?)?;
        let nlu = Nlu::new(lexicon.clone(), Box::new(RuleRecognizer::new(lexicon, preferences)));
        let templates = Templates::from_json(&read(&cfg.join("templates.json"))?)?;
        let help = HelpTemplates::from_json(&read(&cfg.join("help_templates.json"))?)?;
        if let Some(missing) = dm::STATE_KEYS.iter().find(|k| !help.has_state(k)) {
            return Err(LoadError::Invalid(format!("help_templates.json has no entry for {missing}")));
        }

        Ok(Self {
            settings: settings.clone(),
            corpus,
            search,
            qa,
            pak,
            chitchat,
            table,
            recommendations,
            nlu,
            templates,
            help,
            blacklist,
        })
    }

    /// Swaps the intent scorer, keeping the lexicon.
    pub fn with_scorer(mut self, scorer: Box<dyn IntentScorer>) -> Self {
        self.nlu = Nlu::new(self.nlu.lexicon().clone(), scorer);
        self
    }

    pub fn with_reranker(mut self, reranker: Box<dyn Reranker<Score>>) -> Self {
        self.search = self.search.with_reranker(reranker);
        self
    }

    pub fn dm(&self) -> DmContext<'_> {
        DmContext {
            corpus: &self.corpus,
            search: &self.search,
            qa: &self.qa,
            pak: &self.pak,
            chitchat: &self.chitchat,
            table: &self.table,
            recommendations: &self.recommendations,
            page_size: self.settings.search.page_size,
        }
    }

    pub fn composer(&self) -> Composer<'_> {
        Composer {
            corpus: &self.corpus,
            templates: &self.templates,
            help: &self.help,
            blacklist: &self.blacklist,
            lights: self.search.lights(),
            page_size: self.settings.search.page_size,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Bot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub role: Role,
    pub text: String,
    /// Milliseconds since the Unix epoch.
    pub at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub state: DialogueState,
    pub transcript: Vec<TranscriptEntry>,
    pub created_at: u64,
    pub updated_at: u64,
    pub template_seed: u64,
    pub turns: u64,
    pub hints_shown: BTreeSet<String>,
    pub last_response: Option<BotResponse>,
}

impl Session {
    pub fn is_closed(&self) -> bool {
        self.state.sub == Sub::Closed
    }

    fn log(&mut self, role: Role, text: &str, now: u64) {
        let at = match self.transcript.last() {
            Some(last) if last.at >= now => last.at + 1,
            _ => now,
        };
        self.transcript.push(TranscriptEntry {
            role,
            text: text.to_string(),
            at,
        });
        self.updated_at = at;
    }
}

/// What happened inside one turn, for replay and debugging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnTrace {
    pub normalized: String,
    pub intents: Vec<String>,
    pub edge: Option<Edge>,
    pub responder: Responder,
}

#[derive(Debug, Clone)]
pub struct TurnOutcome {
    pub session: Session,
    pub response: BotResponse,
    pub trace: TurnTrace,
}

impl Resources {
    /// A fresh session in the welcome state, with its greeting.
    pub fn new_session(&self, id: impl Into<String>, seed: u64, now: u64) -> (Session, BotResponse) {
        let mut session = Session {
            id: id.into(),
            state: DialogueState::default(),
            transcript: Vec::new(),
            created_at: now,
            updated_at: now,
            template_seed: seed,
            turns: 0,
            hints_shown: BTreeSet::new(),
            last_response: None,
        };
        let response = self
            .composer()
            .compose(&Responder::Greeting, &session.state, seed, &mut session.hints_shown);
        session.log(Role::Bot, &response.speech, now);
        session.last_response = Some(response.clone());
        (session, response)
    }

    /// Runs one turn against a copy of `session`. The input is never
    /// modified, so a failed turn leaves the caller's session untouched.
    pub fn turn(&self, session: &Session, text: &str, now: u64) -> Result<TurnOutcome, TurnError> {
        if session.is_closed() {
            return Err(TurnError::Closed);
        }
        let state = &session.state;
        let normalized = self.nlu.normalize(text);
        let (next_state, responder, intents, edge) = if let Some(term) = self.blacklist.find(text) {
            (state.clone(), Responder::Refusal { term }, Vec::new(), None)
        } else {
            let intents = self.nlu.recognize(text, state.key())?;
            let t = dm::transition(&self.dm(), state, &intents, &normalized)?;
            t.state.validate(&self.corpus).map_err(TurnError::InvalidState)?;
            let labels = intents.iter().map(ToString::to_string).collect();
            (t.state, t.responder, labels, t.edge)
        };
        let mut next = session.clone();
        next.state = next_state;
        let rotation = next.template_seed.wrapping_add(next.turns + 1);
        let response = self
            .composer()
            .compose(&responder, &next.state, rotation, &mut next.hints_shown);
        next.turns += 1;
        next.log(Role::User, text, now);
        next.log(Role::Bot, &response.speech, now);
        next.last_response = Some(response.clone());
        Ok(TurnOutcome {
            session: next,
            response,
            trace: TurnTrace {
                normalized,
                intents,
                edge,
                responder,
            },
        })
    }

    /// The reply used when a turn fails: help for the current state.
    pub fn failure_response(&self, session: &Session) -> BotResponse {
        let responder = Responder::help(&session.state, Some(HelpEvent::ModuleFailure));
        let mut hints = session.hints_shown.clone();
        self.composer()
            .compose(&responder, &session.state, session.template_seed, &mut hints)
    }

    /// Recognized and state-filtered intent keys, as the DM sees them.
    pub fn actionable_intents(&self, text: &str, state: &DialogueState) -> Result<Vec<String>, NluError> {
        let intents = self.nlu.recognize(text, state.key())?;
        let kept = nlu::filter_by_state(&intents, state.key(), |s, i| self.table.has_row(s, i));
        Ok(kept.iter().map(ToString::to_string).collect())
    }
}
