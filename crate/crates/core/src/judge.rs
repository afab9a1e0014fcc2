//! Utterance gating: fluency under the n-gram model, relevance to the
//! previous utterance, the one-sentence rule and target containment.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{pair_features, Example, LinearModel, TrainConfig};
use crate::corpus::lm::{LmConfig, NGramLm};
use crate::corpus::text::{content_lemmas, lemmas, sentence_count, tokenize};
use crate::corpus::IdfTable;
use crate::error::{Error, Result};
use crate::game::Role;
use crate::scalar::quantile;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelevanceMode {
    #[default]
    Cosine,
    Learned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeConfig {
    pub perplexity_ceiling: f64,
    pub relevance_floor: f64,
    pub max_retries: u32,
    pub relevance_mode: RelevanceMode,
    pub forbid_attacker_target: bool,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig {
            perplexity_ceiling: 35.0,
            relevance_floor: 0.05,
            max_retries: 3,
            relevance_mode: RelevanceMode::Cosine,
            forbid_attacker_target: false,
        }
    }
}

impl JudgeConfig {
    /// Ceiling 35 and floor 0.4, the values used with large neural scorers.
    pub fn neural_preset() -> Self {
        JudgeConfig {
            perplexity_ceiling: 35.0,
            relevance_floor: 0.4,
            relevance_mode: RelevanceMode::Learned,
            ..JudgeConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.perplexity_ceiling.is_finite() && self.perplexity_ceiling > 0.0) {
            return Err(Error::Config("perplexity_ceiling must be positive and finite".into()));
        }
        if !(0.0..=1.0).contains(&self.relevance_floor) {
            return Err(Error::Config("relevance_floor must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub fluency_score: f64,
    /// `None` for the opening utterance, which is exempt.
    pub relevance_score: Option<f64>,
    pub fluent: bool,
    pub relevant: bool,
    pub single_sentence: bool,
    /// Only computed for defender utterances.
    pub contains_target: Option<bool>,
    /// Set when the attacker says the target while that is forbidden.
    #[serde(default)]
    pub target_forbidden: bool,
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        self.fluent && self.relevant && self.single_sentence && !self.target_forbidden
    }

    pub fn reason(&self) -> Option<&'static str> {
        if !self.single_sentence {
            Some("more than one sentence")
        } else if !self.fluent {
            Some("not fluent")
        } else if !self.relevant {
            Some("not relevant")
        } else if self.target_forbidden {
            Some("attacker said the target")
        } else {
            None
        }
    }
}

/// Anything that can rule on an utterance. The engine only needs this.
pub trait Referee {
    fn check(&self, context: Option<&str>, text: &str, role: Role, target: &str) -> Result<Verdict>;
}

impl<R: Referee + ?Sized> Referee for &R {
    fn check(&self, context: Option<&str>, text: &str, role: Role, target: &str) -> Result<Verdict> {
        (**self).check(context, text, role, target)
    }
}

/// True iff some run of token lemmas in `text` equals the lemmas of `target`.
pub fn contains_target(text: &str, target: &str) -> bool {
    let want = lemmas(target);
    if want.is_empty() {
        return false;
    }
    let have = lemmas(text);
    have.windows(want.len()).any(|w| w == want.as_slice())
}

/// True iff `guess` names the target up to inflection.
pub fn same_word(guess: &str, target: &str) -> bool {
    let g = lemmas(guess);
    !g.is_empty() && g == lemmas(target)
}

/// IDF-weighted bag of content lemmas.
pub fn lemma_vector(idf: &IdfTable, text: &str) -> BTreeMap<String, f64> {
    let mut v = BTreeMap::new();
    for l in content_lemmas(text) {
        let w = idf.idf(&l);
        *v.entry(l).or_insert(0.0) += w;
    }
    v
}

pub fn cosine_vectors(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    if dot == 0.0 {
        return 0.0;
    }
    let na: f64 = a.values().map(|x| x * x).sum();
    let nb: f64 = b.values().map(|x| x * x).sum();
    (dot / (na * nb).sqrt()).min(1.0)
}

pub fn cosine(idf: &IdfTable, a: &str, b: &str) -> f64 {
    cosine_vectors(&lemma_vector(idf, a), &lemma_vector(idf, b))
}

#[derive(Clone, Debug)]
pub struct Judge {
    cfg: JudgeConfig,
    lm: NGramLm<f64>,
    idf: IdfTable,
    relevance_model: Option<LinearModel<f64>>,
}

impl Judge {
    pub fn new(cfg: JudgeConfig, lm: NGramLm<f64>, idf: IdfTable) -> Result<Self> {
        cfg.validate()?;
        Ok(Judge {
            cfg,
            lm,
            idf,
            relevance_model: None,
        })
    }

    pub fn with_relevance_model(mut self, model: LinearModel<f64>) -> Self {
        self.relevance_model = Some(model);
        self
    }

    pub fn config(&self) -> &JudgeConfig {
        &self.cfg
    }

    pub fn lm(&self) -> &NGramLm<f64> {
        &self.lm
    }

    pub fn idf(&self) -> &IdfTable {
        &self.idf
    }

    pub fn perplexity(&self, text: &str) -> Result<f64> {
        self.lm.perplexity(text)
    }

    pub fn relevance(&self, post: &str, response: &str) -> Result<f64> {
        match self.cfg.relevance_mode {
            RelevanceMode::Cosine => Ok(cosine(&self.idf, post, response)),
            RelevanceMode::Learned => {
                let m = self.relevance_model.as_ref().ok_or(Error::Untrained)?;
                Ok(m.predict_features(&pair_features(post, response, m.width_bits())))
            }
        }
    }

    pub fn check_utterance(&self, context: Option<&str>, text: &str, role: Role, target: &str) -> Result<Verdict> {
        if tokenize(text).is_empty() {
            return Err(Error::EmptyText);
        }
        if role == Role::Defender && tokenize(target).is_empty() {
            return Err(Error::EmptyTarget);
        }
        let fluency_score = self.perplexity(text)?;
        let relevance_score = match context {
            Some(c) => Some(self.relevance(c, text)?),
            None => None,
        };
        let mentions = contains_target(text, target);
        Ok(Verdict {
            fluency_score,
            relevance_score,
            fluent: fluency_score <= self.cfg.perplexity_ceiling,
            relevant: relevance_score.is_none_or(|r| r >= self.cfg.relevance_floor),
            single_sentence: sentence_count(text) == 1,
            contains_target: (role == Role::Defender).then_some(mentions),
            target_forbidden: role == Role::Attacker && self.cfg.forbid_attacker_target && mentions,
        })
    }
}

impl Referee for Judge {
    fn check(&self, context: Option<&str>, text: &str, role: Role, target: &str) -> Result<Verdict> {
        self.check_utterance(context, text, role, target)
    }
}

/// Hands back previously recorded verdicts in order, for replay without
/// any models.
#[derive(Debug, Default)]
pub struct RecordedJudge {
    verdicts: Mutex<VecDeque<Verdict>>,
}

impl RecordedJudge {
    pub fn new(verdicts: impl IntoIterator<Item = Verdict>) -> Self {
        RecordedJudge {
            verdicts: Mutex::new(verdicts.into_iter().collect()),
        }
    }

    pub fn remaining(&self) -> usize {
        self.verdicts.lock().expect("recorded judge lock").len()
    }
}

impl Referee for RecordedJudge {
    fn check(&self, _context: Option<&str>, _text: &str, _role: Role, _target: &str) -> Result<Verdict> {
        self.verdicts
            .lock()
            .expect("recorded judge lock")
            .pop_front()
            .ok_or_else(|| Error::Transcript("more utterances than recorded verdicts".into()))
    }
}

/// The `q` quantile of held-out sentence perplexities under `folds`-fold
/// cross validation.
pub fn calibrate_perplexity_ceiling(sentences: &[String], lm_cfg: &LmConfig<f64>, folds: usize, q: f64) -> Result<f64> {
    if sentences.len() < 2 {
        return Err(Error::EmptyCorpus);
    }
    let folds = folds.clamp(2, sentences.len());
    let mut scores = Vec::with_capacity(sentences.len());
    for f in 0..folds {
        let train: Vec<&String> = sentences.iter().enumerate().filter(|(i, _)| i % folds != f).map(|(_, s)| s).collect();
        let lm = NGramLm::train(&train, lm_cfg)?;
        for s in sentences.iter().skip(f).step_by(folds) {
            if let Ok(p) = lm.perplexity(s) {
                scores.push(p);
            }
        }
    }
    quantile(&scores, q).ok_or(Error::EmptyCorpus)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelevanceTraining {
    pub negatives_per_positive: usize,
    /// Responses occurring more often than this are subsampled.
    pub subsample_threshold: usize,
    pub seed: u64,
    pub train: TrainConfig<f64>,
}

impl Default for RelevanceTraining {
    fn default() -> Self {
        RelevanceTraining {
            negatives_per_positive: 2,
            subsample_threshold: 3,
            seed: 0,
            train: TrainConfig::default(),
        }
    }
}

/// Learns post/response relevance from true pairs against randomly drawn
/// responses. Each occurrence of a response seen `f` times is kept with
/// probability `min(1, sqrt(threshold / f))`.
pub fn train_relevance_model(pairs: &[(String, String)], cfg: &RelevanceTraining) -> Result<LinearModel<f64>> {
    if pairs.len() < 2 {
        return Err(Error::NoExamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for (_, r) in pairs {
        *freq.entry(r.as_str()).or_insert(0) += 1;
    }
    let bits = cfg.train.width_bits;
    let mut examples = Vec::new();
    for (i, (post, response)) in pairs.iter().enumerate() {
        let f = freq[response.as_str()];
        let keep = (cfg.subsample_threshold as f64 / f as f64).sqrt().min(1.0);
        if rng.gen::<f64>() >= keep {
            continue;
        }
        examples.push(Example {
            features: pair_features(post, response, bits),
            label: true,
        });
        let others: Vec<usize> = (0..pairs.len()).filter(|&j| j != i && pairs[j].1 != *response).collect();
        for &j in others.choose_multiple(&mut rng, cfg.negatives_per_positive) {
            examples.push(Example {
                features: pair_features(post, &pairs[j].1, bits),
                label: false,
            });
        }
    }
    let (model, _) = LinearModel::train_examples(&examples, &cfg.train)?;
    Ok(model)
}
