use std::collections::{BTreeMap, HashMap};

use crate::text::{content_tokens, Lemmatizer};

pub type SparseVec = BTreeMap<String, f64>;

/// Smoothed TF-IDF over lemmatized content tokens.
///
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`; unseen terms get the df = 0 value.
#[derive(Debug, Clone, Default)]
pub struct TfIdf {
    idf: HashMap<String, f64>,
    unseen: f64,
    lemmatizer: Lemmatizer,
}

impl TfIdf {
    pub fn fit<'a>(docs: impl IntoIterator<Item = &'a str>, lemmatizer: Lemmatizer) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut n = 0usize;
        for doc in docs {
            n += 1;
            let mut terms = terms_of(&lemmatizer, doc);
            terms.sort();
            terms.dedup();
            for t in terms {
                *df.entry(t).or_default() += 1;
            }
        }
        let nf = n as f64;
        let idf = df
            .into_iter()
            .map(|(t, d)| (t, ((1.0 + nf) / (1.0 + d as f64)).ln() + 1.0))
            .collect();
        Self {
            idf,
            unseen: (1.0 + nf).ln() + 1.0,
            lemmatizer,
        }
    }

    pub fn terms(&self, text: &str) -> Vec<String> {
        terms_of(&self.lemmatizer, text)
    }

    pub fn idf(&self, term: &str) -> f64 {
        self.idf.get(term).copied().unwrap_or(self.unseen)
    }

    /// L2-normalized TF-IDF vector; empty for text without content words.
    pub fn embed(&self, text: &str) -> SparseVec {
        let mut v = SparseVec::new();
        for t in self.terms(text) {
            *v.entry(t).or_default() += 1.0;
        }
        for (t, w) in v.iter_mut() {
            *w *= self.idf(t);
        }
        let norm = v.values().map(|w| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.values_mut().for_each(|w| *w /= norm);
        }
        v
    }

    /// Share of the query's IDF mass whose terms occur in `target`.
    pub fn overlap(&self, query_terms: &[String], target: &str) -> f64 {
        let target = self.terms(target);
        let mut uniq: Vec<&String> = query_terms.iter().collect();
        uniq.sort();
        uniq.dedup();
        let total: f64 = uniq.iter().map(|t| self.idf(t)).sum();
        if total <= 0.0 {
            return 0.0;
        }
        let hit: f64 = uniq
            .iter()
            .filter(|t| target.contains(t))
            .map(|t| self.idf(t))
            .sum();
        hit / total
    }
}

fn terms_of(lemmatizer: &Lemmatizer, text: &str) -> Vec<String> {
    content_tokens(text)
        .iter()
        .map(|t| lemmatizer.lemma(t))
        .collect()
}

pub fn cosine(a: &SparseVec, b: &SparseVec) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small
        .iter()
        .filter_map(|(t, w)| large.get(t).map(|v| w * v))
        .sum()
}
