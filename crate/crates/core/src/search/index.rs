use std::collections::BTreeMap;

use crate::domain::{NutritionFacts, TaskDocument, TaskKind};
use crate::numeric::Scalar;
use crate::text::content_tokens;

use super::bm25::Bm25;
use super::expand::{Term, WeightedTerms};

#[derive(Debug, Clone)]
pub struct IndexedDoc {
    pub id: String,
    pub title: String,
    pub kind: TaskKind,
    pub len: usize,
    pub nutrition: Option<NutritionFacts>,
}

type Postings = Vec<(usize, usize)>;

/// Inverted index over title, keywords and ingredient names.
///
/// Tokens are lowercased with stopwords removed; phrase postings count
/// adjacent token pairs inside a single field value.
#[derive(Debug, Clone, Default)]
pub struct Index {
    docs: Vec<IndexedDoc>,
    words: BTreeMap<String, Postings>,
    phrases: BTreeMap<(String, String), Postings>,
    total_len: usize,
}

/// Field values that feed the index for one document.
pub fn indexed_fields(doc: &TaskDocument) -> Vec<&str> {
    let mut fields = vec![doc.title.as_str()];
    fields.extend(doc.keywords.iter().map(String::as_str));
    fields.extend(doc.ingredients.iter().map(|i| i.name.as_str()));
    fields
}

pub fn build_index<'a>(docs: impl IntoIterator<Item = &'a TaskDocument>) -> Index {
    let mut index = Index::default();
    for doc in docs {
        let ord = index.docs.len();
        let mut tf: BTreeMap<String, usize> = BTreeMap::new();
        let mut ptf: BTreeMap<(String, String), usize> = BTreeMap::new();
        let mut len = 0;
        for field in indexed_fields(doc) {
            let toks = content_tokens(field);
            len += toks.len();
            for pair in toks.windows(2) {
                *ptf.entry((pair[0].clone(), pair[1].clone())).or_default() += 1;
            }
            for t in toks {
                *tf.entry(t).or_default() += 1;
            }
        }
        for (t, n) in tf {
            index.words.entry(t).or_default().push((ord, n));
        }
        for (p, n) in ptf {
            index.phrases.entry(p).or_default().push((ord, n));
        }
        index.total_len += len;
        index.docs.push(IndexedDoc {
            id: doc.id.clone(),
            title: doc.title.clone(),
            kind: doc.kind,
            len,
            nutrition: doc.nutrition,
        });
    }
    index
}

impl Index {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.words.len()
    }

    pub fn docs(&self) -> &[IndexedDoc] {
        &self.docs
    }

    pub fn doc(&self, ord: usize) -> &IndexedDoc {
        &self.docs[ord]
    }

    pub fn avg_len<F: Scalar>(&self) -> F {
        if self.docs.is_empty() {
            F::zero()
        } else {
            F::of_usize(self.total_len) / F::of_usize(self.docs.len())
        }
    }

    fn postings(&self, term: &Term) -> Option<&Postings> {
        match term {
            Term::Word(w) => self.words.get(w),
            Term::Phrase(a, b) => self.phrases.get(&(a.clone(), b.clone())),
        }
    }

    pub fn doc_freq(&self, term: &Term) -> usize {
        self.postings(term).map_or(0, Vec::len)
    }

    /// Accumulated BM25 score per document ordinal for every document that
    /// matches at least one term.
    pub fn score<F: Scalar>(&self, terms: &WeightedTerms, bm25: &Bm25<F>) -> BTreeMap<usize, F> {
        let mut acc: BTreeMap<usize, F> = BTreeMap::new();
        let n = self.docs.len();
        if n == 0 {
            return acc;
        }
        let avg = self.avg_len::<F>();
        for (term, &weight) in terms {
            let Some(postings) = self.postings(term) else {
                continue;
            };
            let idf = bm25.idf(n, postings.len());
            for &(ord, tf) in postings {
                let s = bm25.term_score(F::of(weight), idf, tf, self.docs[ord].len, avg);
                let slot = acc.entry(ord).or_insert_with(F::zero);
                *slot = *slot + s;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil;

    #[test]
    fn empty_corpus_empty_index() {
        let idx = build_index(std::iter::empty());
        assert!(idx.is_empty());
        assert_eq!(idx.vocabulary_size(), 0);
        let terms: WeightedTerms = [(Term::word("soup"), 1.0)].into_iter().collect();
        assert!(idx.score(&terms, &Bm25::<f64>::default()).is_empty());
    }

    #[test]
    fn duplicate_titles_indexed_separately() {
        let corpus = testutil::corpus();
        let mut a = corpus.get("r001").unwrap().clone();
        let mut b = a.clone();
        a.id = "dup-a".into();
        b.id = "dup-b".into();
        let idx = build_index([&a, &b]);
        assert_eq!(idx.len(), 2);
        let terms: WeightedTerms = [(Term::word("soup"), 1.0)].into_iter().collect();
        let scores = idx.score(&terms, &Bm25::<f64>::default());
        assert_eq!(scores.len(), 2);
        assert_eq!(scores[&0], scores[&1]);
    }

    #[test]
    fn phrase_postings_stay_inside_fields() {
        let corpus = testutil::corpus();
        let doc = corpus.get("r006").unwrap();
        let idx = build_index([doc]);
        assert_eq!(idx.doc_freq(&Term::phrase("chocolate", "chip")), 1);
        // last title token and first keyword are not adjacent
        assert_eq!(idx.doc_freq(&Term::phrase("cookies", "cookie")), 0);
    }
}
