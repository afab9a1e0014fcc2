//! Interpolated n-gram language model with add-k smoothing.
//!
//! Each order contributes `(c(ctx, w) + k) / (c(ctx) + k |V|)`, a proper
//! distribution over the vocabulary, and the orders are mixed with weights
//! that sum to one. An unseen context therefore falls back to the uniform
//! distribution at that order rather than to zero.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::text::tokenize;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

const SEP: char = '\u{1f}';

#[derive(Clone, Debug)]
pub struct LmConfig<S> {
    pub order: usize,
    pub k: S,
    /// Mixing weight per order, unigram first. Normalized on build.
    pub weights: Vec<S>,
    /// A closed vocabulary has no unknown bucket and no end marker: every
    /// scored token must be listed.
    pub closed_vocabulary: Option<Vec<String>>,
}

impl<S: Scalar> Default for LmConfig<S> {
    fn default() -> Self {
        LmConfig {
            order: 3,
            k: S::of(0.01),
            weights: vec![S::of(0.1), S::of(0.3), S::of(0.6)],
            closed_vocabulary: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NGramLm<S> {
    order: usize,
    k: S,
    weights: Vec<S>,
    open: bool,
    vocab: BTreeSet<String>,
    counts: HashMap<String, HashMap<String, u64>>,
    totals: HashMap<String, u64>,
}

fn context_key(ctx: &[&str]) -> String {
    let mut key = String::new();
    for (i, t) in ctx.iter().enumerate() {
        if i > 0 {
            key.push(SEP);
        }
        key.push_str(t);
    }
    key
}

impl<S: Scalar> NGramLm<S> {
    /// Trains on tokenized `sentences`; each one is padded independently.
    pub fn train<T: AsRef<str>>(sentences: &[T], cfg: &LmConfig<S>) -> Result<Self> {
        if cfg.order < 2 {
            return Err(Error::Config("n-gram order must be at least 2".into()));
        }
        if cfg.weights.len() != cfg.order || cfg.weights.iter().any(|w| *w < S::zero()) {
            return Err(Error::Config("one non-negative weight per order is required".into()));
        }
        let total: S = cfg.weights.iter().copied().sum();
        if total <= S::zero() || !(cfg.k > S::zero()) {
            return Err(Error::Config("weights must not all be zero and k must be positive".into()));
        }
        let weights = cfg.weights.iter().map(|&w| w / total).collect();
        let (open, mut vocab) = match &cfg.closed_vocabulary {
            Some(v) if v.is_empty() => return Err(Error::Config("closed vocabulary is empty".into())),
            Some(v) => (false, v.iter().map(|t| t.to_lowercase()).collect::<BTreeSet<_>>()),
            None => (true, BTreeSet::new()),
        };
        let mut lm = NGramLm {
            order: cfg.order,
            k: cfg.k,
            weights,
            open,
            vocab: BTreeSet::new(),
            counts: HashMap::new(),
            totals: HashMap::new(),
        };
        let mut tokenized = Vec::with_capacity(sentences.len());
        for s in sentences {
            let toks = tokenize(s.as_ref());
            if !open {
                if let Some(t) = toks.iter().find(|t| !vocab.contains(*t)) {
                    return Err(Error::OutOfVocabulary(t.clone()));
                }
            } else {
                vocab.extend(toks.iter().cloned());
            }
            tokenized.push(toks);
        }
        if open {
            vocab.insert(UNK.to_string());
            vocab.insert(EOS.to_string());
        }
        lm.vocab = vocab;
        for toks in &tokenized {
            if !toks.is_empty() {
                lm.add_sequence(toks);
            }
        }
        Ok(lm)
    }

    fn padded<'a>(&self, toks: &'a [String]) -> Vec<&'a str> {
        let mut seq: Vec<&str> = vec![BOS; self.order - 1];
        seq.extend(toks.iter().map(|t| {
            if self.vocab.contains(t) {
                t.as_str()
            } else {
                UNK
            }
        }));
        if self.open {
            seq.push(EOS);
        }
        seq
    }

    fn add_sequence(&mut self, toks: &[String]) {
        let seq = self.padded(toks);
        for i in self.order - 1..seq.len() {
            for n in 0..self.order {
                let key = context_key(&seq[i - n..i]);
                *self
                    .counts
                    .entry(key.clone())
                    .or_default()
                    .entry(seq[i].to_string())
                    .or_insert(0) += 1;
                *self.totals.entry(key).or_insert(0) += 1;
            }
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Predictable tokens, including the unknown and end markers when open.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(String::as_str)
    }

    /// `P(next | context)`, where only the last `order - 1` context tokens
    /// matter. Missing history is padded with the start marker.
    pub fn prob(&self, context: &[&str], next: &str) -> S {
        let mut ctx: Vec<&str> = vec![BOS; (self.order - 1).saturating_sub(context.len())];
        ctx.extend(context.iter().rev().take(self.order - 1).rev().copied());
        self.prob_padded(&ctx, next)
    }

    fn prob_padded(&self, ctx: &[&str], next: &str) -> S {
        let v = S::of_usize(self.vocab.len());
        let mut p = S::zero();
        for n in 0..self.order {
            let key = context_key(&ctx[ctx.len() - n..]);
            let total = self.totals.get(&key).copied().unwrap_or(0);
            let c = self
                .counts
                .get(&key)
                .and_then(|m| m.get(next))
                .copied()
                .unwrap_or(0);
            let pn = (S::of_usize(c as usize) + self.k) / (S::of_usize(total as usize) + self.k * v);
            p = p + self.weights[n] * pn;
        }
        p
    }

    /// Sum of natural-log probabilities and the number of scored positions.
    pub fn log_prob(&self, text: &str) -> Result<(S, usize)> {
        let toks = tokenize(text);
        if toks.is_empty() {
            return Err(Error::EmptyText);
        }
        if !self.open {
            if let Some(t) = toks.iter().find(|t| !self.vocab.contains(*t)) {
                return Err(Error::OutOfVocabulary(t.clone()));
            }
        }
        let seq = self.padded(&toks);
        let mut sum = S::zero();
        for i in self.order - 1..seq.len() {
            sum = sum + self.prob_padded(&seq[i + 1 - self.order..i], seq[i]).ln();
        }
        Ok((sum, seq.len() + 1 - self.order))
    }

    /// `exp(-mean log probability)`, scoring the end marker when open.
    pub fn perplexity(&self, text: &str) -> Result<S> {
        let (sum, n) = self.log_prob(text)?;
        Ok((-sum / S::of_usize(n)).exp())
    }
}
