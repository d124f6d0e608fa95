//! Hierarchical dialogue state machine: phases, sub-states, a history
//! stack, and a table-driven transition function.

mod state;
mod table;

pub use state::{DialogueState, Phase, Profile, ReturnSub, Snapshot, Sub, HISTORY_LIMIT, STATE_KEYS};
pub use table::{Action, Edge, TableError, TransitionTable, TABLE_STATES};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Corpus, TaskDocument};
use crate::engagement::{ChitChat, ChitChatReply, PakSelector};
use crate::nlu::{filter_by_state, IntentLabel, IntentSet};
use crate::qa::{QaAnswer, QaRouter};
use crate::search::{Facet, SearchEngine};
use crate::text::{find_phrase, tokenize};

pub const DEFAULT_PAGE_SIZE: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DmError {
    #[error("dialogue state refers to unknown task {0:?}")]
    UnknownTask(String),
    #[error("dialogue state is missing {0}")]
    Missing(&'static str),
}

/// Why a help message was produced, when there is a specific reason.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HelpEvent {
    NoResults,
    NoMoreResults,
    FirstPage,
    InvalidSelection,
    EmptyHistory,
    NoPak,
    ClarifyUnclear,
    SearchFailed,
    ModuleFailure,
}

impl HelpEvent {
    pub const ALL: [HelpEvent; 9] = [
        HelpEvent::NoResults,
        HelpEvent::NoMoreResults,
        HelpEvent::FirstPage,
        HelpEvent::InvalidSelection,
        HelpEvent::EmptyHistory,
        HelpEvent::NoPak,
        HelpEvent::ClarifyUnclear,
        HelpEvent::SearchFailed,
        HelpEvent::ModuleFailure,
    ];

    pub fn key(self) -> &'static str {
        match self {
            HelpEvent::NoResults => "no_results",
            HelpEvent::NoMoreResults => "no_more_results",
            HelpEvent::FirstPage => "first_page",
            HelpEvent::InvalidSelection => "invalid_selection",
            HelpEvent::EmptyHistory => "empty_history",
            HelpEvent::NoPak => "no_pak",
            HelpEvent::ClarifyUnclear => "clarify_unclear",
            HelpEvent::SearchFailed => "search_failed",
            HelpEvent::ModuleFailure => "module_failure",
        }
    }
}

/// Which response generator runs, with the data it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Responder {
    Greeting,
    SearchResults {
        query: Option<String>,
        page: usize,
        constraint: Option<String>,
        recommended: bool,
    },
    ClarifyQuestion {
        query: String,
        facets: Vec<Facet>,
    },
    TaskOverview {
        task_id: String,
    },
    StepView {
        task_id: String,
        index: usize,
        detail: bool,
        intro: Option<String>,
    },
    QaAnswer {
        answer: QaAnswer,
    },
    PakQuestion {
        task_id: String,
        step: Option<usize>,
        question: String,
    },
    PakAnswerView {
        question: String,
        answer: String,
    },
    ChitChatReply {
        reply: ChitChatReply,
    },
    Help {
        state: String,
        event: Option<HelpEvent>,
    },
    Goodbye,
    CompletionCongrats {
        task_id: String,
    },
    ConfirmCompletion {
        task_id: String,
    },
    Refusal {
        term: String,
    },
}

impl Responder {
    pub const NAMES: [&'static str; 14] = [
        "greeting",
        "search_results",
        "clarify_question",
        "task_overview",
        "step_view",
        "qa_answer",
        "pak_question",
        "pak_answer_view",
        "chit_chat_reply",
        "help",
        "goodbye",
        "completion_congrats",
        "confirm_completion",
        "refusal",
    ];

    pub fn name(&self) -> &'static str {
        let i = match self {
            Responder::Greeting => 0,
            Responder::SearchResults { .. } => 1,
            Responder::ClarifyQuestion { .. } => 2,
            Responder::TaskOverview { .. } => 3,
            Responder::StepView { .. } => 4,
            Responder::QaAnswer { .. } => 5,
            Responder::PakQuestion { .. } => 6,
            Responder::PakAnswerView { .. } => 7,
            Responder::ChitChatReply { .. } => 8,
            Responder::Help { .. } => 9,
            Responder::Goodbye => 10,
            Responder::CompletionCongrats { .. } => 11,
            Responder::ConfirmCompletion { .. } => 12,
            Responder::Refusal { .. } => 13,
        };
        Self::NAMES[i]
    }

    pub fn help(state: &DialogueState, event: Option<HelpEvent>) -> Self {
        Responder::Help {
            state: state.key().to_string(),
            event,
        }
    }
}

/// Curated list served for "recommend something" requests.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct Recommendations {
    #[serde(default, rename = "recommend_patterns")]
    patterns: Vec<String>,
    #[serde(default, rename = "recommendations")]
    pub ids: Vec<String>,
}

impl Recommendations {
    pub fn new(patterns: Vec<String>, ids: Vec<String>) -> Self {
        Self { patterns, ids }
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn matches(&self, text: &str) -> bool {
        let tokens = tokenize(text);
        self.patterns.iter().any(|p| find_phrase(&tokens, &tokenize(p)).is_some())
    }
}

/// Read-only module handles the transition function consults.
pub struct DmContext<'a> {
    pub corpus: &'a Corpus,
    pub search: &'a SearchEngine,
    pub qa: &'a QaRouter,
    pub pak: &'a PakSelector,
    pub chitchat: &'a ChitChat,
    pub table: &'a TransitionTable,
    pub recommendations: &'a Recommendations,
    pub page_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: DialogueState,
    pub responder: Responder,
    /// Table row that fired, if any.
    pub edge: Option<Edge>,
    pub action: Action,
}

/// Applies the highest-priority intent the current state has a row for.
/// Intents without a row collapse to help with the state unchanged.
pub fn transition(
    ctx: &DmContext<'_>,
    state: &DialogueState,
    intents: &IntentSet,
    utterance: &str,
) -> Result<Transition, DmError> {
    let key = state.key();
    let filtered = filter_by_state(intents, key, |s, i| ctx.table.has_row(s, i));
    let chosen = filtered.iter().find_map(|l| {
        ctx.table
            .get(key, l.key())
            .or_else(|| matches!(l, IntentLabel::Stop).then_some(Action::Stop))
            .map(|a| (l, a))
    });
    let Some((label, action)) = chosen else {
        return Ok(Transition {
            state: state.clone(),
            responder: Responder::help(state, None),
            edge: None,
            action: Action::Help,
        });
    };
    let (mut next, responder) = apply(ctx, state, label, action, utterance)?;
    let changed_phase = next.phase() != state.phase();
    if changed_phase && !matches!(action, Action::GoBack | Action::Restart | Action::Stop) {
        next.push_history(state.snapshot());
    }
    Ok(Transition {
        state: next,
        responder,
        edge: Some(Edge {
            state: key.to_string(),
            intent: label.key().to_string(),
        }),
        action,
    })
}

type Applied = (DialogueState, Responder);

fn unchanged(state: &DialogueState, event: Option<HelpEvent>) -> Applied {
    (state.clone(), Responder::help(state, event))
}

fn task<'c>(ctx: &DmContext<'c>, state: &DialogueState) -> Result<&'c TaskDocument, DmError> {
    let id = state.selected_task.as_deref().ok_or(DmError::Missing("selected task"))?;
    ctx.corpus.get(id).ok_or_else(|| DmError::UnknownTask(id.to_string()))
}

fn step_view(task_id: &str, index: usize, intro: Option<String>) -> Responder {
    Responder::StepView {
        task_id: task_id.to_string(),
        index,
        detail: false,
        intro,
    }
}

fn apply(
    ctx: &DmContext<'_>,
    state: &DialogueState,
    label: &IntentLabel,
    action: Action,
    utterance: &str,
) -> Result<Applied, DmError> {
    let mut s = state.clone();
    let applied = match action {
        Action::Help => unchanged(state, None),
        Action::Stop => {
            s.sub = Sub::Closed;
            clear_task(&mut s);
            s.candidates.clear();
            (s, Responder::Goodbye)
        }
        Action::Search => {
            let query = match label {
                IntentLabel::TaskRequest { query } => query.as_str(),
                _ => utterance,
            };
            if ctx.recommendations.matches(query) || ctx.recommendations.matches(utterance) {
                return Ok(recommend(ctx, state));
            }
            search(ctx, state, query)
        }
        Action::Recommend => recommend(ctx, state),
        Action::ApplyConstraint => {
            let Some(c) = ctx.search.preferences().parse(utterance) else {
                return Ok(unchanged(state, Some(HelpEvent::ClarifyUnclear)));
            };
            s.profile.asked = true;
            s.profile.constraint = Some(c);
            resume_clarified(ctx, state, s)
        }
        Action::SkipClarify => {
            s.profile.asked = true;
            s.profile.constraint = None;
            resume_clarified(ctx, state, s)
        }
        Action::Select => {
            let (IntentLabel::Select(k), Sub::Results { page }) = (label, state.sub) else {
                return Ok(unchanged(state, Some(HelpEvent::InvalidSelection)));
            };
            let idx = page * ctx.page_size + k.saturating_sub(1);
            let on_page = *k >= 1 && *k <= ctx.page_size;
            match s.candidates.get(idx).filter(|_| on_page).cloned() {
                Some(id) => {
                    if ctx.corpus.get(&id).is_none() {
                        return Err(DmError::UnknownTask(id));
                    }
                    s.sub = Sub::Overview;
                    s.selected_task = Some(id.clone());
                    s.step_cursor = 0;
                    (s, Responder::TaskOverview { task_id: id })
                }
                None => unchanged(state, Some(HelpEvent::InvalidSelection)),
            }
        }
        Action::MoreResults | Action::PreviousPage | Action::ShowResults => {
            let Sub::Results { page } = state.sub else {
                return Ok(unchanged(state, None));
            };
            let target = match action {
                Action::MoreResults if (page + 1) * ctx.page_size < s.candidates.len() => page + 1,
                Action::MoreResults => return Ok(unchanged(state, Some(HelpEvent::NoMoreResults))),
                Action::PreviousPage if page > 0 => page - 1,
                Action::PreviousPage => return Ok(unchanged(state, Some(HelpEvent::FirstPage))),
                _ => page,
            };
            s.sub = Sub::Results { page: target };
            let r = results_view(&s, None, false);
            (s, r)
        }
        Action::ShowOverview => {
            let doc = task(ctx, state)?;
            (s, Responder::TaskOverview { task_id: doc.id.clone() })
        }
        Action::StartTask => {
            let doc = task(ctx, state)?;
            s.step_cursor = 1;
            forward(ctx, doc, s)
        }
        Action::NextStep => {
            let doc = task(ctx, state)?;
            s.pak_current = None;
            if s.step_cursor < doc.steps.len() {
                s.step_cursor += 1;
                forward(ctx, doc, s)
            } else {
                s.sub = Sub::ConfirmComplete;
                (s, Responder::ConfirmCompletion { task_id: doc.id.clone() })
            }
        }
        Action::PreviousStep => {
            let doc = task(ctx, state)?;
            if state.sub != Sub::ConfirmComplete {
                s.step_cursor = s.step_cursor.saturating_sub(1).max(1);
            }
            s.sub = Sub::Step;
            s.pak_current = None;
            let r = step_view(&doc.id, s.step_cursor, None);
            (s, r)
        }
        Action::RepeatStep | Action::ResumeStep => {
            let doc = task(ctx, state)?;
            s.sub = Sub::Step;
            s.pak_current = None;
            let r = step_view(&doc.id, s.step_cursor, None);
            (s, r)
        }
        Action::Details => {
            let doc = task(ctx, state)?;
            let r = Responder::StepView {
                task_id: doc.id.clone(),
                index: s.step_cursor,
                detail: true,
                intro: None,
            };
            (s, r)
        }
        Action::OfferPak => {
            let doc = task(ctx, state)?;
            match ctx.pak.first_unshown(doc, &s.pak_shown) {
                Some(pair) => {
                    s.pak_shown.insert(pair.key());
                    s.pak_current = Some(pair.clone());
                    s.sub = Sub::PakOffer;
                    let r = Responder::PakQuestion {
                        task_id: doc.id.clone(),
                        step: None,
                        question: pair.question.clone(),
                    };
                    (s, r)
                }
                None => unchanged(state, Some(HelpEvent::NoPak)),
            }
        }
        Action::PakAnswer => {
            let pair = s.pak_current.clone().ok_or(DmError::Missing("offered pair"))?;
            s.sub = Sub::PakAnswer;
            (
                s,
                Responder::PakAnswerView {
                    question: pair.question,
                    answer: pair.answer,
                },
            )
        }
        Action::Qa => {
            let doc = task(ctx, state)?;
            let answer = ctx.qa.answer(utterance, doc, s.step_cursor.max(1));
            (s, Responder::QaAnswer { answer })
        }
        Action::ChitchatEnter => {
            let doc = task(ctx, state)?;
            let return_to = match state.sub {
                Sub::PakOffer => ReturnSub::PakOffer,
                Sub::PakAnswer => ReturnSub::PakAnswer,
                _ => ReturnSub::Step,
            };
            s.sub = Sub::ChitChat { return_to };
            s.chitchat.turns = 0;
            chat_turn(ctx, doc, s, utterance)
        }
        Action::ChitchatTurn => {
            let doc = task(ctx, state)?;
            chat_turn(ctx, doc, s, utterance)
        }
        Action::ChitchatExit => {
            let doc = task(ctx, state)?;
            let intro = ctx.chitchat.exit_text(&doc.title);
            return_from_chat(doc, s, Some(intro))
        }
        Action::Complete => {
            let doc = task(ctx, state)?;
            s.sub = Sub::Complete;
            s.pak_current = None;
            (s, Responder::CompletionCongrats { task_id: doc.id.clone() })
        }
        Action::Restart => {
            let fresh = DialogueState {
                profile: s.profile,
                pak_shown: s.pak_shown,
                chitchat: s.chitchat,
                ..DialogueState::default()
            };
            (fresh, Responder::Greeting)
        }
        Action::GoBack => {
            if !s.pop_history() {
                return Ok(unchanged(state, Some(HelpEvent::EmptyHistory)));
            }
            if !matches!(s.sub, Sub::PakOffer | Sub::PakAnswer) {
                s.pak_current = None;
            }
            let r = view_for(ctx, &s)?;
            (s, r)
        }
    };
    Ok(applied)
}

fn clear_task(s: &mut DialogueState) {
    s.selected_task = None;
    s.step_cursor = 0;
    s.clarify = None;
    s.pak_current = None;
}

fn enter_results(s: &mut DialogueState, ids: Vec<String>) {
    clear_task(s);
    s.sub = Sub::Results { page: 0 };
    s.candidates = ids;
}

fn results_view(s: &DialogueState, query: Option<String>, recommended: bool) -> Responder {
    let page = match s.sub {
        Sub::Results { page } => page,
        _ => 0,
    };
    Responder::SearchResults {
        query,
        page,
        constraint: s.profile.constraint.as_ref().map(|c| c.describe()),
        recommended,
    }
}

fn search(ctx: &DmContext<'_>, state: &DialogueState, query: &str) -> Applied {
    let resp = match ctx.search.request(query, state.profile.as_search_profile()) {
        Ok(r) => r,
        Err(e) => {
            tracing::warn!("search failed: {e}");
            return unchanged(state, Some(HelpEvent::SearchFailed));
        }
    };
    let mut s = state.clone();
    if let Some(q) = resp.pending_clarification {
        clear_task(&mut s);
        s.candidates.clear();
        s.sub = Sub::Clarify;
        s.clarify = Some(q.query.clone());
        return (
            s,
            Responder::ClarifyQuestion {
                query: q.query,
                facets: q.facets,
            },
        );
    }
    if resp.ranked.is_empty() {
        return unchanged(state, Some(HelpEvent::NoResults));
    }
    if resp.constraint.is_some() {
        s.profile.asked = true;
        s.profile.constraint = resp.constraint.clone();
    }
    let ids = resp.ranked.into_iter().map(|h| h.id).collect();
    enter_results(&mut s, ids);
    let r = results_view(&s, Some(resp.query), false);
    (s, r)
}

fn resume_clarified(ctx: &DmContext<'_>, state: &DialogueState, mut s: DialogueState) -> Applied {
    let Some(pending) = state.clarify.clone() else {
        return unchanged(state, None);
    };
    let engine = ctx.search;
    let q = engine.query(&pending, crate::domain::TaskKind::Recipe, s.profile.constraint.clone());
    let resp = match engine.search(&q) {
        Ok(r) => r,
        Err(e) => {
            tracing::warn!("search failed: {e}");
            return unchanged(state, Some(HelpEvent::SearchFailed));
        }
    };
    if resp.ranked.is_empty() {
        return unchanged(state, Some(HelpEvent::NoResults));
    }
    let ids = resp.ranked.into_iter().map(|h| h.id).collect();
    enter_results(&mut s, ids);
    let r = results_view(&s, Some(resp.query), false);
    (s, r)
}

fn recommend(ctx: &DmContext<'_>, state: &DialogueState) -> Applied {
    let ids: Vec<String> = ctx
        .recommendations
        .ids
        .iter()
        .filter(|id| ctx.corpus.get(id).is_some() && !ctx.search.is_blocked(id))
        .cloned()
        .collect();
    if ids.is_empty() {
        return unchanged(state, Some(HelpEvent::NoResults));
    }
    let mut s = state.clone();
    enter_results(&mut s, ids);
    let r = results_view(&s, None, true);
    (s, r)
}

/// Lands on the current cursor after a forward move, offering a PAK pair
/// when the schedule and the store allow.
fn forward(ctx: &DmContext<'_>, doc: &TaskDocument, mut s: DialogueState) -> Applied {
    if let Some(pair) = ctx.pak.offer(doc, s.step_cursor, &s.pak_shown) {
        s.pak_shown.insert(pair.key());
        s.pak_current = Some(pair.clone());
        s.sub = Sub::PakOffer;
        let r = Responder::PakQuestion {
            task_id: doc.id.clone(),
            step: Some(s.step_cursor),
            question: pair.question.clone(),
        };
        return (s, r);
    }
    s.sub = Sub::Step;
    s.pak_current = None;
    let r = step_view(&doc.id, s.step_cursor, None);
    (s, r)
}

fn chat_turn(ctx: &DmContext<'_>, doc: &TaskDocument, mut s: DialogueState, utterance: &str) -> Applied {
    let (cs, reply) = ctx.chitchat.reply(&s.chitchat, utterance, &doc.title);
    s.chitchat = cs;
    if reply.exit {
        return return_from_chat(doc, s, Some(reply.text));
    }
    (s, Responder::ChitChatReply { reply })
}

fn return_from_chat(doc: &TaskDocument, mut s: DialogueState, intro: Option<String>) -> Applied {
    let Sub::ChitChat { return_to } = s.sub else {
        let r = step_view(&doc.id, s.step_cursor, intro);
        return (s, r);
    };
    s.sub = return_to.sub();
    let r = match (return_to, s.pak_current.clone()) {
        (ReturnSub::PakOffer, Some(p)) => Responder::PakQuestion {
            task_id: doc.id.clone(),
            step: None,
            question: p.question,
        },
        (ReturnSub::PakAnswer, Some(p)) => Responder::PakAnswerView {
            question: p.question,
            answer: p.answer,
        },
        _ => {
            s.sub = Sub::Step;
            s.pak_current = None;
            step_view(&doc.id, s.step_cursor, intro)
        }
    };
    (s, r)
}

/// The responder that re-presents the state as it stands.
pub fn view_for(ctx: &DmContext<'_>, s: &DialogueState) -> Result<Responder, DmError> {
    Ok(match s.sub {
        Sub::Welcome => Responder::Greeting,
        Sub::Clarify => Responder::ClarifyQuestion {
            query: s.clarify.clone().unwrap_or_default(),
            facets: Facet::ALL.to_vec(),
        },
        Sub::Results { .. } => results_view(s, None, false),
        Sub::Overview => Responder::TaskOverview {
            task_id: task(ctx, s)?.id.clone(),
        },
        Sub::Step | Sub::ChitChat { .. } => step_view(&task(ctx, s)?.id, s.step_cursor, None),
        Sub::PakOffer | Sub::PakAnswer => {
            let doc = task(ctx, s)?;
            match &s.pak_current {
                Some(p) if s.sub == Sub::PakOffer => Responder::PakQuestion {
                    task_id: doc.id.clone(),
                    step: None,
                    question: p.question.clone(),
                },
                Some(p) => Responder::PakAnswerView {
                    question: p.question.clone(),
                    answer: p.answer.clone(),
                },
                None => step_view(&doc.id, s.step_cursor, None),
            }
        }
        Sub::ConfirmComplete => Responder::ConfirmCompletion {
            task_id: task(ctx, s)?.id.clone(),
        },
        Sub::Complete => Responder::CompletionCongrats {
            task_id: task(ctx, s)?.id.clone(),
        },
        Sub::Closed => Responder::Goodbye,
    })
}
