//! Task-oriented dialogue engine for multi-step cooking and how-to tasks.

pub mod config;
pub mod dm;
pub mod domain;
pub mod engagement;
pub mod nlu;
pub mod numeric;
pub mod pipeline;
pub mod qa;
pub mod replay;
pub mod response;
pub mod safety;
pub mod search;
pub mod text;

#[cfg(test)]
mod testutil;

/// Scalar used by the scoring kernels in production.
pub type Score = f64;
pub type Bm25 = search::Bm25<Score>;
pub type Hit = search::Hit<Score>;
pub type SearchResponse = search::SearchResponse<Score>;
pub type Candidate = search::Candidate<Score>;

pub use config::Settings;
pub use dm::{DialogueState, Responder};
pub use pipeline::{Resources, Session, TurnError, TurnOutcome};
pub use response::BotResponse;
