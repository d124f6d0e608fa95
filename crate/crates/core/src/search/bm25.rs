//! Okapi BM25 term scoring.
//!
//! ```text
//! score(D,Q) = Σ w(q) · IDF(q) · tf(q,D)·(k1+1) / (tf(q,D) + k1·(1 − b + b·|D|/avgdl))
//! IDF(q)     = ln(1 + (N − df(q) + 0.5) / (df(q) + 0.5))
//! ```
//!
//! `w(q)` is the query-side term weight produced by expansion.

use crate::numeric::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25<F> {
    pub k1: F,
    pub b: F,
}

impl<F: Scalar> Default for Bm25<F> {
    fn default() -> Self {
        Self {
            k1: F::of(1.2),
            b: F::of(0.75),
        }
    }
}

impl<F: Scalar> Bm25<F> {
    pub fn new(k1: F, b: F) -> Self {
        Self { k1, b }
    }

    pub fn idf(&self, n_docs: usize, df: usize) -> F {
        let n = F::of_usize(n_docs);
        let df = F::of_usize(df);
        let half = F::of(0.5);
        (F::one() + (n - df + half) / (df + half)).ln()
    }

    pub fn saturation(&self, tf: usize, doc_len: usize, avg_len: F) -> F {
        if tf == 0 {
            return F::zero();
        }
        let tf = F::of_usize(tf);
        let ratio = if avg_len > F::zero() {
            F::of_usize(doc_len) / avg_len
        } else {
            F::one()
        };
        let norm = F::one() - self.b + self.b * ratio;
        tf * (self.k1 + F::one()) / (tf + self.k1 * norm)
    }

    pub fn term_score(&self, weight: F, idf: F, tf: usize, doc_len: usize, avg_len: F) -> F {
        weight * idf * self.saturation(tf, doc_len, avg_len)
    }
}
