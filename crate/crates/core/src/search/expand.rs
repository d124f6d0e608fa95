use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::text::{is_stopword, tokenize, Lemmatizer};

pub const ORIGINAL_WEIGHT: f64 = 1.0;
pub const DERIVED_WEIGHT: f64 = 0.5;

/// A single token or an adjacent two-token phrase.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Word(String),
    Phrase(String, String),
}

impl Term {
    pub fn word(w: &str) -> Self {
        Term::Word(w.to_string())
    }

    pub fn phrase(a: &str, b: &str) -> Self {
        Term::Phrase(a.to_string(), b.to_string())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Word(w) => f.write_str(w),
            Term::Phrase(a, b) => write!(f, "{a} {b}"),
        }
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub type WeightedTerms = BTreeMap<Term, f64>;

/// Lemma and compound-noun query expansion.
#[derive(Debug, Clone, Default)]
pub struct QueryExpander {
    lemmatizer: Lemmatizer,
    nouns: Arc<HashSet<String>>,
}

impl QueryExpander {
    pub fn new(lemmatizer: Lemmatizer, nouns: HashSet<String>) -> Self {
        Self {
            lemmatizer,
            nouns: Arc::new(nouns),
        }
    }

    /// Parses a noun list with one word per line; `#` starts a comment.
    pub fn nouns_from_text(text: &str) -> HashSet<String> {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect()
    }

    pub fn lemmatizer(&self) -> &Lemmatizer {
        &self.lemmatizer
    }

    pub fn is_noun(&self, token: &str) -> bool {
        self.nouns.contains(token)
    }

    pub fn expand(&self, raw: &str) -> WeightedTerms {
        let tokens = tokenize(raw);
        let content: Vec<&String> = tokens.iter().filter(|t| !is_stopword(t)).collect();
        let mut terms = WeightedTerms::new();
        if content.is_empty() {
            for t in &tokens {
                terms.insert(Term::Word(t.clone()), ORIGINAL_WEIGHT);
            }
            return terms;
        }
        let mut bump = |term: Term, w: f64| {
            let slot = terms.entry(term).or_insert(w);
            if *slot < w {
                *slot = w;
            }
        };
        for t in &content {
            bump(Term::Word((*t).clone()), ORIGINAL_WEIGHT);
        }
        for t in &content {
            let lemma = self.lemmatizer.lemma(t);
            if lemma != **t {
                bump(Term::Word(lemma), DERIVED_WEIGHT);
            }
        }
        for pair in content.windows(2) {
            if self.is_noun(pair[0]) && self.is_noun(pair[1]) {
                bump(Term::phrase(pair[0], pair[1]), DERIVED_WEIGHT);
            }
        }
        terms
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil;

    fn expander() -> QueryExpander {
        testutil::expander()
    }

    fn w(terms: &WeightedTerms, t: Term) -> Option<f64> {
        terms.get(&t).copied()
    }

    #[test]
    fn chocolate_chip_cookies() {
        let terms = expander().expand("making chocolate chip cookies");
        let want: WeightedTerms = [
            (Term::word("make"), 0.5),
            (Term::word("chocolate"), 1.0),
            (Term::word("chip"), 1.0),
            (Term::word("cookie"), 0.5),
            (Term::phrase("chocolate", "chip"), 0.5),
            (Term::word("making"), 1.0),
            (Term::word("cookies"), 1.0),
        ]
        .into_iter()
        .collect();
        assert_eq!(terms, want);
    }

    #[test]
    fn single_base_noun() {
        let terms = expander().expand("pasta");
        assert_eq!(terms.len(), 1);
        assert_eq!(w(&terms, Term::word("pasta")), Some(1.0));
    }

    #[test]
    fn suffix_rules() {
        let terms = expander().expand("cleaning sneakers");
        assert_eq!(w(&terms, Term::word("clean")), Some(0.5));
        assert_eq!(w(&terms, Term::word("sneaker")), Some(0.5));
        assert_eq!(w(&terms, Term::word("cleaning")), Some(1.0));
    }

    #[test]
    fn all_stopwords_returns_tokens() {
        let terms = expander().expand("how do I");
        let keys: Vec<String> = terms.keys().map(|t| t.to_string()).collect();
        assert_eq!(keys, vec!["do", "how", "i"]);
        assert!(terms.values().all(|&v| v == 1.0));
    }

    #[test]
    fn original_weight_wins_over_derived() {
        // "egg" is both an original token and the lemma of "eggs"
        let terms = expander().expand("egg eggs");
        assert_eq!(w(&terms, Term::word("egg")), Some(1.0));
    }
}
