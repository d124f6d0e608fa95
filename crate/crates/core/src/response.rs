//! Turns responder selections into speech plus a structured display.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dm::{DialogueState, HelpEvent, Phase, Responder, Sub};
use crate::domain::{Corpus, TaskDocument, TaskKind};
use crate::safety::Blacklist;
use crate::search::{Facet, Level, TrafficLights};
use crate::text::sentence_join;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("templates: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("templates: {0} must not be empty")]
    Empty(String),
}

/// Speech templates keyed by responder, then phase (`*` matches any).
#[derive(Debug, Clone, Deserialize)]
pub struct Templates {
    generic: Vec<String>,
    templates: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    #[serde(default)]
    hints: BTreeMap<String, String>,
}

impl Templates {
    pub fn from_json(json: &str) -> Result<Self, TemplateError> {
        let t: Self = serde_json::from_str(json)?;
        if t.generic.iter().all(|g| g.trim().is_empty()) {
            return Err(TemplateError::Empty("generic".into()));
        }
        for (key, by_phase) in &t.templates {
            for (phase, variants) in by_phase {
                if variants.is_empty() || variants.iter().any(|v| v.trim().is_empty()) {
                    return Err(TemplateError::Empty(format!("{key}/{phase}")));
                }
            }
        }
        Ok(t)
    }

    pub fn has(&self, key: &str) -> bool {
        self.templates.contains_key(key)
    }

    /// Variant for `key` in `phase`, rotated by `rotation`. Missing keys
    /// fall back to the generic template.
    pub fn pick(&self, key: &str, phase: Phase, rotation: u64) -> &str {
        let phase_key = serde_json::to_value(phase)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let variants = self
            .templates
            .get(key)
            .and_then(|m| m.get(&phase_key).or_else(|| m.get("*")));
        let list = match variants {
            Some(v) => v,
            None => {
                tracing::warn!("no template for {key} in {phase_key}");
                &self.generic
            }
        };
        &list[(rotation % list.len() as u64) as usize]
    }

    pub fn hint(&self, view: &str) -> Option<&str> {
        self.hints.get(view).map(String::as_str)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct HelpTemplates {
    default: String,
    states: BTreeMap<String, String>,
    #[serde(default)]
    events: BTreeMap<String, String>,
}

impl HelpTemplates {
    pub fn from_json(json: &str) -> Result<Self, TemplateError> {
        let h: Self = serde_json::from_str(json)?;
        if h.default.trim().is_empty() {
            return Err(TemplateError::Empty("default".into()));
        }
        if let Some((k, _)) = h.states.iter().find(|(_, v)| v.trim().is_empty()) {
            return Err(TemplateError::Empty(k.clone()));
        }
        Ok(h)
    }

    /// State-specific help; never empty.
    pub fn message(&self, state_key: &str) -> &str {
        self.states.get(state_key).unwrap_or(&self.default)
    }

    pub fn event(&self, event: HelpEvent) -> Option<&str> {
        self.events.get(event.key()).map(String::as_str)
    }

    pub fn has_state(&self, state_key: &str) -> bool {
        self.states.contains_key(state_key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskCard {
    pub number: usize,
    pub id: String,
    pub title: String,
    pub kind: TaskKind,
    pub steps: usize,
    pub image_ref: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub nutrition: BTreeMap<Facet, Level>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Display {
    TaskCardList {
        cards: Vec<TaskCard>,
        page: usize,
        total: usize,
    },
    StepView {
        task_id: String,
        title: String,
        index: usize,
        total: usize,
        instruction: String,
        has_details: bool,
        has_tips: bool,
        details: Option<String>,
        tips: Option<String>,
        image_ref: Option<String>,
    },
    ClarifyPrompt {
        facets: Vec<Facet>,
    },
    PakOffer {
        question: String,
    },
    PlainText,
}

impl Display {
    pub fn kind(&self) -> &'static str {
        match self {
            Display::TaskCardList { .. } => "task_card_list",
            Display::StepView { .. } => "step_view",
            Display::ClarifyPrompt { .. } => "clarify_prompt",
            Display::PakOffer { .. } => "pak_offer",
            Display::PlainText => "plain_text",
        }
    }
}

/// What clients need to know about where the dialogue stands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub phase: Phase,
    pub sub: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page: Option<usize>,
    pub cursor: usize,
    pub task_id: Option<String>,
    pub total_steps: Option<usize>,
    pub history_depth: usize,
}

impl StateSnapshot {
    pub fn of(state: &DialogueState, corpus: &Corpus) -> Self {
        let page = match state.sub {
            Sub::Results { page } => Some(page),
            _ => None,
        };
        Self {
            phase: state.phase(),
            sub: state.key().to_string(),
            page,
            cursor: state.step_cursor,
            task_id: state.selected_task.clone(),
            total_steps: state
                .selected_task
                .as_deref()
                .and_then(|id| corpus.get(id))
                .map(|d| d.steps.len()),
            history_depth: state.history.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BotResponse {
    pub speech: String,
    pub display: Display,
    pub responder: String,
    pub state_snapshot: StateSnapshot,
}

pub fn fill(template: &str, slots: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (name, value) in slots {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}

/// Read-only inputs to [`Composer::compose`].
pub struct Composer<'a> {
    pub corpus: &'a Corpus,
    pub templates: &'a Templates,
    pub help: &'a HelpTemplates,
    pub blacklist: &'a Blacklist,
    pub lights: &'a TrafficLights,
    pub page_size: usize,
}

impl Composer<'_> {
    /// Builds the response for `responder` given the post-transition state.
    /// `hints_shown` records which views already carried a navigation hint.
    pub fn compose(
        &self,
        responder: &Responder,
        state: &DialogueState,
        rotation: u64,
        hints_shown: &mut BTreeSet<String>,
    ) -> BotResponse {
        let phase = state.phase();
        let pick = |key: &str| self.templates.pick(key, phase, rotation);
        let (mut speech, display) = match responder {
            Responder::Greeting => (pick("greeting").to_string(), Display::PlainText),
            Responder::SearchResults {
                query,
                page,
                constraint,
                recommended,
            } => {
                let cards = self.cards(&state.candidates, *page);
                let listed: Vec<String> = cards.iter().map(|c| format!("{}: {}", c.number, c.title)).collect();
                let first = cards.first().map_or(0, |c| c.number + page * self.page_size);
                let slots = [
                    ("query", query.clone().unwrap_or_default()),
                    ("constraint", constraint.as_ref().map(|c| format!(" with {c}")).unwrap_or_default()),
                    ("cards", sentence_join(&listed)),
                    ("first", first.to_string()),
                    ("last", (first + cards.len()).saturating_sub(1).to_string()),
                ];
                let key = if *recommended {
                    "search_results.recommended"
                } else if query.is_none() || *page > 0 {
                    "search_results.page"
                } else {
                    "search_results"
                };
                (
                    fill(pick(key), &slots),
                    Display::TaskCardList {
                        cards,
                        page: *page,
                        total: state.candidates.len(),
                    },
                )
            }
            Responder::ClarifyQuestion { query, facets } => (
                fill(pick("clarify_question"), &[("query", query.clone())]),
                Display::ClarifyPrompt { facets: facets.clone() },
            ),
            Responder::TaskOverview { task_id } => match self.corpus.get(task_id) {
                Some(doc) => (fill(pick("task_overview"), &overview_slots(doc)), Display::PlainText),
                None => (pick("generic").to_string(), Display::PlainText),
            },
            Responder::StepView {
                task_id,
                index,
                detail,
                intro,
            } => {
                let (mut text, display) = self.step(task_id, *index, *detail, phase, rotation);
                if let Some(i) = intro {
                    text = format!("{i} {text}");
                }
                (text, display)
            }
            Responder::QaAnswer { answer } => {
                (fill(pick("qa_answer"), &[("answer", answer.text.clone())]), Display::PlainText)
            }
            Responder::PakQuestion {
                task_id,
                step,
                question,
            } => {
                let offer = fill(pick("pak_question"), &[("question", question.clone())]);
                let text = match step {
                    Some(i) => format!("{} {offer}", self.step(task_id, *i, false, phase, rotation).0),
                    None => offer,
                };
                (
                    text,
                    Display::PakOffer {
                        question: question.clone(),
                    },
                )
            }
            Responder::PakAnswerView { answer, .. } => {
                (fill(pick("pak_answer_view"), &[("answer", answer.clone())]), Display::PlainText)
            }
            Responder::ChitChatReply { reply } => {
                (fill(pick("chit_chat_reply"), &[("text", reply.text.clone())]), Display::PlainText)
            }
            Responder::Help { state: key, event } => {
                let base = self.help.message(key);
                let text = match event.and_then(|e| self.help.event(e)) {
                    Some(e) => format!("{e} {base}"),
                    None => base.to_string(),
                };
                (text, Display::PlainText)
            }
            Responder::Goodbye => (pick("goodbye").to_string(), Display::PlainText),
            Responder::CompletionCongrats { task_id } => (
                fill(pick("completion_congrats"), &[("title", self.title(task_id))]),
                Display::PlainText,
            ),
            Responder::ConfirmCompletion { task_id } => (
                fill(pick("confirm_completion"), &[("title", self.title(task_id))]),
                Display::PlainText,
            ),
            Responder::Refusal { .. } => (pick("refusal").to_string(), Display::PlainText),
        };
        if let Some(hint) = self.templates.hint(display.kind()) {
            if hints_shown.insert(display.kind().to_string()) {
                speech = format!("{speech} {hint}");
            }
        }
        if let Some(term) = self.blacklist.find(&speech) {
            tracing::warn!("composed speech contained blocked term {term:?}; replaced");
            speech = pick("refusal").to_string();
        }
        if speech.trim().is_empty() {
            speech = self.help.message(state.key()).to_string();
        }
        BotResponse {
            speech,
            display,
            responder: responder.name().to_string(),
            state_snapshot: StateSnapshot::of(state, self.corpus),
        }
    }

    fn title(&self, id: &str) -> String {
        self.corpus.get(id).map(|d| d.title.clone()).unwrap_or_default()
    }

    fn cards(&self, ids: &[String], page: usize) -> Vec<TaskCard> {
        ids.iter()
            .skip(page * self.page_size)
            .take(self.page_size)
            .filter_map(|id| self.corpus.get(id))
            .enumerate()
            .map(|(i, d)| TaskCard {
                number: i + 1,
                id: d.id.clone(),
                title: d.title.clone(),
                kind: d.kind,
                steps: d.steps.len(),
                image_ref: d.image_ref.clone(),
                nutrition: d
                    .nutrition
                    .as_ref()
                    .map(|n| {
                        Facet::ALL
                            .iter()
                            .filter_map(|f| self.lights.level(*f, f.value(n)).ok().map(|l| (*f, l)))
                            .collect()
                    })
                    .unwrap_or_default(),
            })
            .collect()
    }

    fn step(&self, task_id: &str, index: usize, detail: bool, phase: Phase, rotation: u64) -> (String, Display) {
        let pick = |key: &str| self.templates.pick(key, phase, rotation).to_string();
        let Some(doc) = self.corpus.get(task_id) else {
            return (pick("generic"), Display::PlainText);
        };
        let Some(step) = doc.step(index) else {
            return (pick("generic"), Display::PlainText);
        };
        let key = if detail { "step_view.detail" } else { "step_view" };
        let slots = [
            ("index", index.to_string()),
            ("total", doc.steps.len().to_string()),
            ("instruction", step.instruction.clone()),
            ("text", step.text.clone()),
            ("title", doc.title.clone()),
        ];
        (
            fill(&pick(key), &slots),
            Display::StepView {
                task_id: doc.id.clone(),
                title: doc.title.clone(),
                index,
                total: doc.steps.len(),
                instruction: step.instruction.clone(),
                has_details: step.has_details(),
                has_tips: step.has_tips(),
                details: step.details.clone(),
                tips: step.tips.clone(),
                image_ref: doc.image_ref.clone(),
            },
        )
    }
}

fn overview_slots(doc: &TaskDocument) -> Vec<(&'static str, String)> {
    let needs: Vec<&str> = if doc.is_recipe() {
        doc.ingredients.iter().map(|i| i.name.as_str()).collect()
    } else {
        doc.requirements.iter().map(String::as_str).collect()
    };
    let needs = if needs.is_empty() {
        String::new()
    } else {
        format!(" You'll need {}.", sentence_join(&needs))
    };
    vec![
        ("title", doc.title.clone()),
        ("steps", doc.steps.len().to_string()),
        ("needs", needs),
    ]
}
