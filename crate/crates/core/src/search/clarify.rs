use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::text::tokenize;

use super::nutrition::{Facet, Level, NutritionConstraint, NutritionError};

/// Phrases that express a nutrition preference, matched on whole tokens.
#[derive(Debug, Clone, Default)]
pub struct PreferenceLexicon {
    // longest phrase first
    phrases: Vec<(Vec<String>, NutritionConstraint)>,
}

#[derive(Deserialize)]
struct PrefsFile {
    phrases: BTreeMap<String, BTreeMap<String, String>>,
}

/// Result of matching preference phrases against an utterance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PreferenceMatch {
    pub constraint: NutritionConstraint,
    /// Tokens of the utterance with matched phrases removed.
    pub remainder: Vec<String>,
}

impl PreferenceLexicon {
    pub fn from_json(json: &str) -> Result<Self, NutritionError> {
        let file: PrefsFile =
            serde_json::from_str(json).map_err(|e| NutritionError::Parse(e.to_string()))?;
        let mut phrases = Vec::with_capacity(file.phrases.len());
        for (phrase, caps) in file.phrases {
            let caps = caps
                .iter()
                .map(|(f, l)| Ok((f.parse::<Facet>()?, l.parse::<Level>()?)))
                .collect::<Result<Vec<_>, NutritionError>>()?;
            let toks = tokenize(&phrase);
            if toks.is_empty() {
                continue;
            }
            phrases.push((toks, NutritionConstraint::new(caps)));
        }
        phrases.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(Self { phrases })
    }

    /// Greedy left-to-right scan taking the longest phrase at each position.
    pub fn scan(&self, text: &str) -> PreferenceMatch {
        let tokens = tokenize(text);
        let mut out = PreferenceMatch::default();
        let mut i = 0;
        while i < tokens.len() {
            let hit = self.phrases.iter().find(|(p, _)| {
                i + p.len() <= tokens.len() && tokens[i..i + p.len()] == p[..]
            });
            match hit {
                Some((p, c)) => {
                    out.constraint.merge(c);
                    i += p.len();
                }
                None => {
                    out.remainder.push(tokens[i].clone());
                    i += 1;
                }
            }
        }
        out
    }

    pub fn parse(&self, text: &str) -> Option<NutritionConstraint> {
        let m = self.scan(text);
        (!m.constraint.is_empty()).then_some(m.constraint)
    }
}

/// The question asked before showing recipe results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClarifyQuestion {
    pub query: String,
    pub facets: Vec<Facet>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClarifyDecision {
    /// The request already states a preference.
    Constrained(NutritionConstraint),
    /// No preference known yet; ask once.
    Ask(ClarifyQuestion),
    /// Use whatever the profile holds (possibly nothing).
    Proceed(Option<NutritionConstraint>),
}

/// Decides whether a recipe request needs a nutrition question.
///
/// `profile` is `None` when the user has never been asked, and
/// `Some(None)` when they were asked and declined.
pub fn decide(
    lexicon: &PreferenceLexicon,
    query: &str,
    profile: Option<Option<&NutritionConstraint>>,
) -> ClarifyDecision {
    if let Some(c) = lexicon.parse(query) {
        return ClarifyDecision::Constrained(c);
    }
    match profile {
        None => ClarifyDecision::Ask(ClarifyQuestion {
            query: query.to_string(),
            facets: Facet::ALL.to_vec(),
        }),
        Some(c) => ClarifyDecision::Proceed(c.cloned()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> PreferenceLexicon {
        let json = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../data/config/prefs.json"
        ))
        .unwrap();
        PreferenceLexicon::from_json(&json).unwrap()
    }

    #[test]
    fn longest_phrase_wins() {
        let m = lex().scan("low saturated fat lasagna");
        assert_eq!(m.constraint, NutritionConstraint::new([(Facet::Saturates, Level::Low)]));
        assert_eq!(m.remainder, vec!["lasagna"]);
    }

    #[test]
    fn multiple_phrases_merge() {
        let c = lex().parse("low fat and low salt please").unwrap();
        assert_eq!(c.get(Facet::Fat), Some(Level::Low));
        assert_eq!(c.get(Facet::Salt), Some(Level::Low));
        assert_eq!(c.get(Facet::Sugar), None);
    }

    #[test]
    fn no_phrase_no_constraint() {
        assert_eq!(lex().parse("chicken soup"), None);
        // whole-token matching only
        assert_eq!(lex().parse("clean the lightbulb"), None);
    }

    #[test]
    fn decision_cases() {
        let l = lex();
        assert!(matches!(decide(&l, "low fat soup", None), ClarifyDecision::Constrained(_)));
        assert!(matches!(decide(&l, "soup", None), ClarifyDecision::Ask(_)));
        assert_eq!(decide(&l, "soup", Some(None)), ClarifyDecision::Proceed(None));
        let c = NutritionConstraint::new([(Facet::Fat, Level::Low)]);
        assert_eq!(
            decide(&l, "soup", Some(Some(&c))),
            ClarifyDecision::Proceed(Some(c.clone()))
        );
    }
}
