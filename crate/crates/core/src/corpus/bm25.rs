//! Okapi BM25 over lemmatized retrieval units (paragraphs or posts).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::text::{content_lemmas, is_content, lemma, tokenize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params<S> {
    pub k1: S,
    pub b: S,
}

impl<S: Scalar> Default for Bm25Params<S> {
    fn default() -> Self {
        Bm25Params {
            k1: S::of(1.2),
            b: S::of(0.75),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitRef {
    pub doc_id: String,
    pub position: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit<S> {
    pub unit: usize,
    pub score: S,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Bm25Index<S> {
    params: Bm25Params<S>,
    units: Vec<UnitRef>,
    lengths: Vec<u32>,
    avg_len: S,
    postings: BTreeMap<String, Vec<(u32, u32)>>,
}

/// Terms indexed for a text: lemmas of its content tokens.
pub fn index_terms(text: &str) -> Vec<String> {
    tokenize(text)
        .iter()
        .filter(|t| is_content(t))
        .map(|t| lemma(t))
        .collect()
}

impl<S: Scalar> Bm25Index<S> {
    /// Builds the index from `(doc id, position, text)` units, keeping their
    /// order as unit numbers.
    pub fn build<'a>(units: impl IntoIterator<Item = (String, usize, &'a str)>, params: Bm25Params<S>) -> Self {
        let mut refs = Vec::new();
        let mut lengths = Vec::new();
        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        for (doc_id, position, text) in units {
            let uid = refs.len() as u32;
            let terms = index_terms(text);
            lengths.push(terms.len() as u32);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in terms {
                *tf.entry(t).or_insert(0) += 1;
            }
            for (t, c) in tf {
                postings.entry(t).or_default().push((uid, c));
            }
            refs.push(UnitRef { doc_id, position });
        }
        let total: u64 = lengths.iter().map(|&l| l as u64).sum();
        let avg_len = if refs.is_empty() {
            S::zero()
        } else {
            S::of(total as f64 / refs.len() as f64)
        };
        Bm25Index {
            params,
            units: refs,
            lengths,
            avg_len,
            postings,
        }
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn unit(&self, i: usize) -> &UnitRef {
        &self.units[i]
    }

    pub fn contains_term(&self, term: &str) -> bool {
        self.postings.contains_key(term)
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// `ln(1 + (N - n + 0.5) / (n + 0.5))`, always positive.
    pub fn idf(&self, term: &str) -> S {
        let n = S::of_usize(self.document_frequency(term));
        let total = S::of_usize(self.units.len());
        let half = S::of(0.5);
        (S::one() + (total - n + half) / (n + half)).ln()
    }

    fn term_score(&self, idf: S, tf: u32, len: u32) -> S {
        let Bm25Params { k1, b } = self.params;
        let tf = S::of_usize(tf as usize);
        let norm = if self.avg_len > S::zero() {
            S::one() - b + b * S::of_usize(len as usize) / self.avg_len
        } else {
            S::one()
        };
        idf * tf * (k1 + S::one()) / (tf + k1 * norm)
    }

    /// Distinct in-vocabulary query terms, sorted.
    pub fn query_terms(&self, query: &str) -> Vec<String> {
        content_lemmas(query)
            .into_iter()
            .filter(|t| self.postings.contains_key(t))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Scores of every unit for `query`, by unit number.
    pub fn score_all(&self, query: &str) -> Vec<S> {
        let mut scores = vec![S::zero(); self.units.len()];
        for term in self.query_terms(query) {
            let idf = self.idf(&term);
            for &(u, tf) in &self.postings[&term] {
                scores[u as usize] = scores[u as usize] + self.term_score(idf, tf, self.lengths[u as usize]);
            }
        }
        scores
    }

    /// Top `k` units; ties go to the smaller document id, then the earlier
    /// position. A query without any indexed term retrieves nothing.
    pub fn retrieve(&self, query: &str, k: usize) -> Vec<Hit<S>> {
        if self.query_terms(query).is_empty() {
            return Vec::new();
        }
        let scores = self.score_all(query);
        let mut order: Vec<usize> = (0..self.units.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.units[a].doc_id.cmp(&self.units[b].doc_id))
                .then_with(|| self.units[a].position.cmp(&self.units[b].position))
        });
        order
            .into_iter()
            .take(k)
            .map(|unit| Hit {
                unit,
                score: scores[unit],
            })
            .collect()
    }
}
