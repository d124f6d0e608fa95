//! Lexical task retrieval with nutrition-aware filtering.

mod bm25;
mod clarify;
mod expand;
mod index;
mod nutrition;
mod rerank;

pub use bm25::Bm25;
pub use clarify::{decide, ClarifyDecision, ClarifyQuestion, PreferenceLexicon, PreferenceMatch};
pub use expand::{QueryExpander, Term, WeightedTerms, DERIVED_WEIGHT, ORIGINAL_WEIGHT};
pub use index::{build_index, indexed_fields, Index, IndexedDoc};
pub use nutrition::{Facet, Level, NutritionConstraint, NutritionError, Thresholds, TrafficLights};
pub use rerank::{weighted_jaccard, Candidate, IdentityReranker, OverlapReranker, Reranker};

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::domain::{Corpus, TaskKind};
use crate::numeric::{cmp_desc, Scalar};
use crate::safety::Blacklist;
use crate::text::tokenize;

pub const DEFAULT_TOP_N: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("re-ranker output is not a permutation of its input ({expected} candidates, got {got})")]
    NotPermutation { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hit<F> {
    pub id: String,
    pub title: String,
    pub score: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchQuery {
    /// Query text with preference phrases removed.
    pub text: String,
    pub domain: TaskKind,
    pub terms: WeightedTerms,
    pub constraint: Option<NutritionConstraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResponse<F> {
    pub query: String,
    pub domain: TaskKind,
    pub ranked: Vec<Hit<F>>,
    pub constraint: Option<NutritionConstraint>,
    pub pending_clarification: Option<ClarifyQuestion>,
}

impl<F> SearchResponse<F> {
    pub fn ids(&self) -> Vec<&str> {
        self.ranked.iter().map(|h| h.id.as_str()).collect()
    }
}

/// Everything besides the corpus that the engine needs.
pub struct SearchParts<F: Scalar> {
    pub expander: QueryExpander,
    pub preferences: PreferenceLexicon,
    pub lights: TrafficLights,
    pub blacklist: Blacklist,
    pub recipe_cues: Vec<String>,
    pub bm25: Bm25<F>,
    pub top_n: usize,
}

impl<F: Scalar> Default for SearchParts<F> {
    fn default() -> Self {
        Self {
            expander: QueryExpander::default(),
            preferences: PreferenceLexicon::default(),
            lights: TrafficLights::default(),
            blacklist: Blacklist::default(),
            recipe_cues: Vec::new(),
            bm25: Bm25::default(),
            top_n: DEFAULT_TOP_N,
        }
    }
}

pub struct SearchEngine<F: Scalar = f64> {
    recipes: Index,
    howtos: Index,
    blocked: HashSet<String>,
    expander: QueryExpander,
    preferences: PreferenceLexicon,
    lights: TrafficLights,
    recipe_cues: HashSet<String>,
    bm25: Bm25<F>,
    top_n: usize,
    reranker: Box<dyn Reranker<F>>,
}

impl<F: Scalar> SearchEngine<F> {
    /// Builds both indexes. Uses the overlap re-ranker unless replaced.
    pub fn new(corpus: &Corpus, parts: SearchParts<F>) -> Self {
        let blocked = corpus
            .iter()
            .filter(|d| parts.blacklist.matches(&d.title))
            .map(|d| d.id.clone())
            .collect();
        Self {
            recipes: build_index(corpus.of_kind(TaskKind::Recipe)),
            howtos: build_index(corpus.of_kind(TaskKind::HowTo)),
            blocked,
            reranker: Box::new(OverlapReranker::new(parts.expander.clone())),
            expander: parts.expander,
            preferences: parts.preferences,
            lights: parts.lights,
            recipe_cues: parts.recipe_cues.into_iter().collect(),
            bm25: parts.bm25,
            top_n: parts.top_n,
        }
    }

    pub fn with_reranker(mut self, reranker: Box<dyn Reranker<F>>) -> Self {
        self.reranker = reranker;
        self
    }

    pub fn index_of(&self, kind: TaskKind) -> &Index {
        match kind {
            TaskKind::Recipe => &self.recipes,
            TaskKind::HowTo => &self.howtos,
        }
    }

    pub fn expander(&self) -> &QueryExpander {
        &self.expander
    }

    pub fn preferences(&self) -> &PreferenceLexicon {
        &self.preferences
    }

    pub fn lights(&self) -> &TrafficLights {
        &self.lights
    }

    pub fn bm25(&self) -> &Bm25<F> {
        &self.bm25
    }

    pub fn top_n(&self) -> usize {
        self.top_n
    }

    pub fn is_blocked(&self, id: &str) -> bool {
        self.blocked.contains(id)
    }

    pub fn query(
        &self,
        text: &str,
        domain: TaskKind,
        constraint: Option<NutritionConstraint>,
    ) -> SearchQuery {
        let stripped = self.preferences.scan(text).remainder.join(" ");
        SearchQuery {
            terms: self.expander.expand(&stripped),
            text: stripped,
            domain,
            constraint: constraint.filter(|c| !c.is_empty()),
        }
    }

    /// Every unblocked document with a positive BM25 score, best first,
    /// ties broken by id.
    pub fn lexical(&self, query: &SearchQuery) -> Vec<Hit<F>> {
        let index = self.index_of(query.domain);
        let mut hits: Vec<Hit<F>> = index
            .score(&query.terms, &self.bm25)
            .into_iter()
            .filter(|&(_, s)| s > F::zero())
            .map(|(ord, score)| {
                let d = index.doc(ord);
                Hit {
                    id: d.id.clone(),
                    title: d.title.clone(),
                    score,
                }
            })
            .filter(|h| !self.blocked.contains(&h.id))
            .collect();
        hits.sort_by(|a, b| cmp_desc(a.score, b.score).then_with(|| a.id.cmp(&b.id)));
        hits
    }

    /// Top-N lexical hits, then the nutrition filter, then re-ranking.
    pub fn search(&self, query: &SearchQuery) -> Result<SearchResponse<F>, SearchError> {
        let mut hits = self.lexical(query);
        hits.truncate(self.top_n);
        let constraint = match query.domain {
            TaskKind::Recipe => query.constraint.clone(),
            TaskKind::HowTo => None,
        };
        if let Some(c) = &constraint {
            let index = self.index_of(query.domain);
            let facts: std::collections::HashMap<&str, _> = index
                .docs()
                .iter()
                .map(|d| (d.id.as_str(), d.nutrition))
                .collect();
            hits.retain(|h| {
                let f = facts.get(h.id.as_str()).copied().flatten();
                c.satisfied_by(f.as_ref(), &self.lights)
            });
        }
        let ranked = self.rerank(&query.terms, hits)?;
        Ok(SearchResponse {
            query: query.text.clone(),
            domain: query.domain,
            ranked,
            constraint,
            pending_clarification: None,
        })
    }

    fn rerank(&self, terms: &WeightedTerms, hits: Vec<Hit<F>>) -> Result<Vec<Hit<F>>, SearchError> {
        let candidates: Vec<Candidate<F>> = hits
            .iter()
            .map(|h| Candidate {
                id: h.id.clone(),
                title: h.title.clone(),
                bm25: h.score,
            })
            .collect();
        let order = self.reranker.rerank(terms, &candidates);
        let want: BTreeSet<&str> = hits.iter().map(|h| h.id.as_str()).collect();
        let got: BTreeSet<&str> = order.iter().map(|(id, _)| id.as_str()).collect();
        if order.len() != hits.len() || want != got {
            return Err(SearchError::NotPermutation {
                expected: hits.len(),
                got: order.len(),
            });
        }
        Ok(order
            .into_iter()
            .map(|(id, score)| {
                let title = hits.iter().find(|h| h.id == id).map(|h| h.title.clone()).unwrap_or_default();
                Hit { id, title, score }
            })
            .collect())
    }

    /// Recipe cue words win outright; otherwise the corpus with the
    /// stronger best match. No match at all falls back to how-to.
    pub fn detect_domain(&self, text: &str) -> TaskKind {
        if tokenize(text).iter().any(|t| self.recipe_cues.contains(t)) {
            return TaskKind::Recipe;
        }
        let top = |kind| {
            self.lexical(&self.query(text, kind, None))
                .first()
                .map_or(F::zero(), |h| h.score)
        };
        if top(TaskKind::Recipe) > top(TaskKind::HowTo) {
            TaskKind::Recipe
        } else {
            TaskKind::HowTo
        }
    }

    /// Full request handling: domain detection, then for recipes either a
    /// stated preference, a pending question, or the stored profile.
    ///
    /// `profile` follows [`decide`]: `None` means never asked.
    pub fn request(
        &self,
        text: &str,
        profile: Option<Option<&NutritionConstraint>>,
    ) -> Result<SearchResponse<F>, SearchError> {
        let domain = self.detect_domain(text);
        if domain == TaskKind::HowTo {
            return self.search(&self.query(text, domain, None));
        }
        match decide(&self.preferences, text, profile) {
            ClarifyDecision::Constrained(c) => self.search(&self.query(text, domain, Some(c))),
            ClarifyDecision::Proceed(c) => self.search(&self.query(text, domain, c)),
            ClarifyDecision::Ask(question) => {
                let q = self.query(text, domain, None);
                if self.lexical(&q).is_empty() {
                    return self.search(&q);
                }
                Ok(SearchResponse {
                    query: q.text,
                    domain,
                    ranked: Vec::new(),
                    constraint: None,
                    pending_clarification: Some(question),
                })
            }
        }
    }
}
