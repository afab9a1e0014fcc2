//! Target word selection by frequency, concreteness and part of speech.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::nouns::is_noun;
use super::text::{is_stopword, lemma};
use super::Corpus;

/// Thresholds are inclusive: a word passes with `frequency >= min_frequency`
/// and `concreteness >= min_concreteness`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionCriteria {
    pub min_frequency: u64,
    pub min_concreteness: Option<f64>,
    pub nouns_only: bool,
}

impl SelectionCriteria {
    /// Frequency above 8000 and concreteness above 4.5 on a large
    /// encyclopedic corpus, expressed with inclusive bounds.
    pub fn encyclopedia_preset() -> Self {
        SelectionCriteria {
            min_frequency: 8001,
            min_concreteness: Some(4.51),
            nouns_only: true,
        }
    }

    /// Frequency above 200 on a conversational corpus.
    pub fn conversation_preset() -> Self {
        SelectionCriteria {
            min_frequency: 201,
            min_concreteness: None,
            nouns_only: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_frequency < 1 {
            return Err(Error::Config("min_frequency must be at least 1".into()));
        }
        if let Some(c) = self.min_concreteness {
            if !(1.0..=5.0).contains(&c) {
                return Err(Error::Config("min_concreteness must lie in [1, 5]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetWord {
    pub word: String,
    pub frequency: u64,
    pub concreteness: Option<f64>,
}

/// Word to concreteness rating on the 1..=5 scale.
#[derive(Clone, Debug, Default)]
pub struct ConcretenessTable {
    by_word: HashMap<String, f64>,
    by_lemma: HashMap<String, f64>,
}

impl ConcretenessTable {
    pub fn from_entries(entries: impl IntoIterator<Item = (String, f64)>) -> Self {
        let mut t = ConcretenessTable::default();
        for (w, s) in entries {
            let w = w.to_lowercase();
            t.by_lemma.entry(lemma(&w)).or_insert(s);
            t.by_word.insert(w, s);
        }
        t
    }

    /// Tab separated `word<TAB>score`. A header line is allowed; when it names
    /// a `Conc.M` column (the norms layout) that column supplies the score.
    pub fn parse(text: &str) -> Result<Self> {
        let mut score_col = 1;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if entries.is_empty() && i == 0 {
                if let Some(c) = cols.iter().position(|c| c.eq_ignore_ascii_case("conc.m")) {
                    score_col = c;
                    continue;
                }
                if cols.get(1).is_some_and(|c| c.parse::<f64>().is_err()) {
                    continue;
                }
            }
            let malformed = |message: &str| Error::Malformed {
                line: i + 1,
                message: message.to_string(),
            };
            let word = cols.first().filter(|w| !w.is_empty()).ok_or_else(|| malformed("missing word"))?;
            let score: f64 = cols
                .get(score_col)
                .ok_or_else(|| malformed("missing score"))?
                .parse()
                .map_err(|_| malformed("score is not a number"))?;
            if !(1.0..=5.0).contains(&score) {
                return Err(malformed("score outside [1, 5]"));
            }
            entries.push((word.to_string(), score));
        }
        Ok(Self::from_entries(entries))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        let w = word.to_lowercase();
        self.by_word.get(&w).or_else(|| self.by_lemma.get(&lemma(&w))).copied()
    }

    pub fn len(&self) -> usize {
        self.by_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_word.is_empty()
    }
}

/// Words grouped by lemma; each group is represented by its most frequent
/// surface form and counts every inflection. Sorted by descending frequency,
/// then alphabetically.
pub fn select_target_words(
    corpus: Option<&Corpus>,
    criteria: &SelectionCriteria,
    concreteness: Option<&ConcretenessTable>,
) -> Result<Vec<TargetWord>> {
    criteria.validate()?;
    if criteria.min_concreteness.is_some() && concreteness.is_none() {
        return Err(Error::MissingConcreteness);
    }
    let Some(corpus) = corpus else {
        return Ok(Vec::new());
    };
    let mut groups: BTreeMap<String, (u64, String, u64)> = BTreeMap::new();
    for (tok, &count) in corpus.token_frequencies() {
        if !tok.chars().all(char::is_alphabetic) || is_stopword(tok) {
            continue;
        }
        let entry = groups.entry(lemma(tok)).or_insert((0, tok.clone(), 0));
        entry.0 += count;
        if count > entry.2 || (count == entry.2 && *tok < entry.1) {
            entry.1 = tok.clone();
            entry.2 = count;
        }
    }
    let mut out: Vec<TargetWord> = groups
        .into_values()
        .filter(|(freq, word, _)| *freq >= criteria.min_frequency && (!criteria.nouns_only || is_noun(word)))
        .filter_map(|(frequency, word, _)| {
            let score = concreteness.and_then(|t| t.get(&word));
            match criteria.min_concreteness {
                Some(min) if score.is_none_or(|s| s < min) => None,
                _ => Some(TargetWord {
                    word,
                    frequency,
                    concreteness: score,
                }),
            }
        })
        .collect();
    out.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.word.cmp(&b.word)));
    Ok(out)
}
