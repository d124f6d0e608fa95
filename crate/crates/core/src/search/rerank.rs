use crate::numeric::{cmp_desc, Scalar};

use super::expand::{QueryExpander, WeightedTerms};

/// A lexical hit passed to a re-ranker.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<F> {
    pub id: String,
    pub title: String,
    pub bm25: F,
}

/// Reorders the top lexical hits. Implementations must return a
/// permutation of the candidate ids; the engine rejects anything else.
pub trait Reranker<F: Scalar>: Send + Sync {
    fn rerank(&self, query: &WeightedTerms, candidates: &[Candidate<F>]) -> Vec<(String, F)>;
}

/// Keeps the lexical order.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityReranker;

impl<F: Scalar> Reranker<F> for IdentityReranker {
    fn rerank(&self, _query: &WeightedTerms, candidates: &[Candidate<F>]) -> Vec<(String, F)> {
        candidates.iter().map(|c| (c.id.clone(), c.bm25)).collect()
    }
}

/// Blends normalized BM25 with weighted Jaccard overlap between the
/// expanded query and the expanded title:
///
/// ```text
/// final = α · bm25 / max_bm25 + (1 − α) · Σ min(q,t) / Σ max(q,t)
/// ```
#[derive(Debug, Clone)]
pub struct OverlapReranker<F> {
    expander: QueryExpander,
    alpha: F,
}

impl<F: Scalar> OverlapReranker<F> {
    pub fn new(expander: QueryExpander) -> Self {
        Self {
            expander,
            alpha: F::of(0.5),
        }
    }

    pub fn with_alpha(mut self, alpha: F) -> Self {
        self.alpha = alpha;
        self
    }
}

pub fn weighted_jaccard<F: Scalar>(a: &WeightedTerms, b: &WeightedTerms) -> F {
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, &wa) in a {
        let wb = b.get(t).copied().unwrap_or(0.0);
        num += wa.min(wb);
        den += wa.max(wb);
    }
    for (t, &wb) in b {
        if !a.contains_key(t) {
            den += wb;
        }
    }
    if den > 0.0 {
        F::of(num / den)
    } else {
        F::zero()
    }
}

impl<F: Scalar> Reranker<F> for OverlapReranker<F> {
    fn rerank(&self, query: &WeightedTerms, candidates: &[Candidate<F>]) -> Vec<(String, F)> {
        let max = candidates
            .iter()
            .map(|c| c.bm25)
            .fold(F::zero(), |m, s| if s > m { s } else { m });
        let mut scored: Vec<(F, &Candidate<F>)> = candidates
            .iter()
            .map(|c| {
                let lex = if max > F::zero() { c.bm25 / max } else { F::zero() };
                let overlap: F = weighted_jaccard(query, &self.expander.expand(&c.title));
                (self.alpha * lex + (F::one() - self.alpha) * overlap, c)
            })
            .collect();
        scored.sort_by(|a, b| {
            cmp_desc(a.0, b.0)
                .then_with(|| cmp_desc(a.1.bm25, b.1.bm25))
                .then_with(|| a.1.id.cmp(&b.1.id))
        });
        scored.into_iter().map(|(s, c)| (c.id.clone(), s)).collect()
    }
}
