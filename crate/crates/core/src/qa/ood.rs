use serde::Deserialize;
use thiserror::Error;

use crate::text::{tokenize, Lemmatizer};

use super::tfidf::{cosine, SparseVec, TfIdf};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OodError {
    #[error("backend timed out")]
    Timeout,
    #[error("backend unavailable: {0}")]
    Unavailable(String),
}

/// Answers open-domain questions. Backends enforce their own deadline and
/// report it as [`OodError::Timeout`]; any error makes the caller use the
/// fallback sentence.
pub trait OodBackend: Send + Sync {
    fn answer(&self, question: &str) -> Result<Option<String>, OodError>;
}

/// Always unavailable.
#[derive(Debug, Clone, Copy, Default)]
pub struct DisabledOod;

impl OodBackend for DisabledOod {
    fn answer(&self, _question: &str) -> Result<Option<String>, OodError> {
        Err(OodError::Unavailable("disabled".into()))
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct OodEntry {
    pub question: String,
    pub answer: String,
}

/// Canned answers looked up by exact normalized text, then by cosine.
#[derive(Debug, Clone)]
pub struct FixtureOod {
    entries: Vec<(String, SparseVec, String)>,
    model: TfIdf,
    threshold: f64,
}

fn norm(q: &str) -> String {
    tokenize(q).join(" ")
}

impl FixtureOod {
    pub fn new(entries: Vec<OodEntry>, lemmatizer: Lemmatizer, threshold: f64) -> Self {
        let model = TfIdf::fit(entries.iter().map(|e| e.question.as_str()), lemmatizer);
        let entries = entries
            .into_iter()
            .map(|e| (norm(&e.question), model.embed(&e.question), e.answer))
            .collect();
        Self {
            entries,
            model,
            threshold,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl OodBackend for FixtureOod {
    fn answer(&self, question: &str) -> Result<Option<String>, OodError> {
        let key = norm(question);
        if let Some((_, _, a)) = self.entries.iter().find(|(k, _, _)| *k == key) {
            return Ok(Some(a.clone()));
        }
        let q = self.model.embed(question);
        let best = self
            .entries
            .iter()
            .map(|(_, v, a)| (cosine(&q, v), a))
            .fold(None::<(f64, &String)>, |best, cur| match best {
                Some(b) if b.0 >= cur.0 => Some(b),
                _ => Some(cur),
            });
        Ok(best.filter(|(s, _)| *s >= self.threshold).map(|(_, a)| a.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> FixtureOod {
        FixtureOod::new(
            vec![
                OodEntry {
                    question: "who invented pizza".into(),
                    answer: "Raffaele Esposito.".into(),
                },
                OodEntry {
                    question: "how far is the moon".into(),
                    answer: "About 384,400 km.".into(),
                },
            ],
            Lemmatizer::default(),
            0.5,
        )
    }

    #[test]
    fn exact_and_fuzzy() {
        let f = fixture();
        assert_eq!(f.answer("Who invented pizza?").unwrap().as_deref(), Some("Raffaele Esposito."));
        assert_eq!(f.answer("how far away is the moon").unwrap().as_deref(), Some("About 384,400 km."));
        assert_eq!(f.answer("what is love").unwrap(), None);
    }

    #[test]
    fn disabled_errors() {
        assert!(DisabledOod.answer("x").is_err());
    }
}
