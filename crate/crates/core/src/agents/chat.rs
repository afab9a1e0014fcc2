//! Chatbot players over a post/response store: a retrieval attacker with
//! four post-selection strategies and a retrieval defender with optional
//! suspicion-based guessing and response filtering.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{LinearModel, TrainConfig};
use crate::corpus::bm25::{Bm25Index, Bm25Params};
use crate::corpus::nouns::is_noun;
use crate::corpus::pairs::{check_disjoint, PostResponsePair, Split};
use crate::corpus::text::{content_lemmas, lemma, tokenize};
use crate::corpus::IdfTable;
use crate::error::{Error, Result};
use crate::game::{Role, RoleView};
use crate::graph::ConceptGraph;
use crate::judge::{contains_target, cosine, Judge};
use crate::scalar::quantile;

use super::{Agent, AgentAction, Responder};

pub const CHAT_BACKOFF: &str = "I am not sure what you mean.";
pub const DEFAULT_RETRIEVE_K: usize = 5;
pub const DEFAULT_API_BUDGET: usize = 64;

/// Pairs of both splits with the indices each side needs.
#[derive(Debug)]
pub struct PairStore {
    pairs: Vec<PostResponsePair>,
    attacker: Vec<usize>,
    defender: Vec<usize>,
    idf: IdfTable,
    defender_index: Bm25Index<f64>,
}

impl PairStore {
    /// Fails if the two splits share a pair.
    pub fn new(pairs: Vec<PostResponsePair>) -> Result<Self> {
        check_disjoint(&pairs)?;
        let attacker: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].split == Split::Attacker).collect();
        let defender: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].split == Split::Defender).collect();
        let idf = IdfTable::from_texts(pairs.iter().flat_map(|p| [p.post.as_str(), p.golden_response.as_str()]));
        let defender_index = Bm25Index::build(
            defender.iter().map(|&i| (format!("pair{i:06}"), 0, pairs[i].post.as_str())),
            Bm25Params::default(),
        );
        Ok(PairStore {
            pairs,
            attacker,
            defender,
            idf,
            defender_index,
        })
    }

    pub fn pairs(&self) -> &[PostResponsePair] {
        &self.pairs
    }

    pub fn pair(&self, id: usize) -> &PostResponsePair {
        &self.pairs[id]
    }

    pub fn attacker_ids(&self) -> &[usize] {
        &self.attacker
    }

    pub fn defender_ids(&self) -> &[usize] {
        &self.defender
    }

    pub fn idf(&self) -> &IdfTable {
        &self.idf
    }

    /// Attacker-split posts that may be said while attacking `target`.
    pub fn usable(&self, target: &str) -> Vec<usize> {
        self.attacker
            .iter()
            .copied()
            .filter(|&i| !contains_target(&self.pairs[i].post, target))
            .collect()
    }

    /// Usable posts whose golden response contains the target.
    pub fn qualifying(&self, target: &str) -> Vec<usize> {
        self.usable(target)
            .into_iter()
            .filter(|&i| contains_target(&self.pairs[i].golden_response, target))
            .collect()
    }

    /// Defender-split pair ids for the `k` stored posts most similar to `post`.
    pub fn retrieve(&self, post: &str, k: usize) -> Vec<usize> {
        self.defender_index
            .retrieve(post, k)
            .into_iter()
            .map(|h| self.defender[h.unit])
            .collect()
    }
}

fn by_score_then_id(scored: &mut [(usize, f64)]) {
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
}

/// Ids ordered by cosine to `context`, most similar first.
pub fn rank_by_relevance(store: &PairStore, ids: &[usize], context: &str) -> Vec<(usize, f64)> {
    let mut scored: Vec<(usize, f64)> = ids
        .iter()
        .map(|&i| (i, cosine(store.idf(), context, &store.pair(i).post)))
        .collect();
    by_score_then_id(&mut scored);
    scored
}

/// First turn of topic leading: a uniformly random qualifying post.
pub fn topic_leading_select(target: &str, store: &PairStore, used: &HashSet<usize>, rng: &mut ChaCha8Rng) -> Result<usize> {
    let q: Vec<usize> = store.qualifying(target).into_iter().filter(|i| !used.contains(i)).collect();
    q.choose(rng).copied().ok_or_else(|| Error::NoQualifyingPost(target.to_string()))
}

/// Golden trigger: the qualifying post most relevant to the defender's last
/// utterance (random on the first turn); once those run out, the most
/// relevant other post.
pub fn golden_trigger_select(
    target: &str,
    store: &PairStore,
    last_defender: Option<&str>,
    used: &HashSet<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<usize> {
    let q: Vec<usize> = store.qualifying(target).into_iter().filter(|i| !used.contains(i)).collect();
    match last_defender {
        None => q.choose(rng).copied().ok_or_else(|| Error::NoQualifyingPost(target.to_string())),
        Some(ctx) if !q.is_empty() => Ok(rank_by_relevance(store, &q, ctx)[0].0),
        Some(ctx) => {
            let rest: Vec<usize> = store.usable(target).into_iter().filter(|i| !used.contains(i)).collect();
            rank_by_relevance(store, &rest, ctx).first().map(|p| p.0).ok_or(Error::PoolExhausted)
        }
    }
}

/// Unused post with the highest predicted probability; ties go to the lower id.
pub fn classifier_rank_select(model: Option<&LinearModel<f64>>, store: &PairStore, ids: &[usize], used: &HashSet<usize>) -> Result<usize> {
    let model = model.ok_or(Error::Untrained)?;
    rank_by_model(model, store, ids, used).first().map(|p| p.0).ok_or(Error::PoolExhausted)
}

fn rank_by_model(model: &LinearModel<f64>, store: &PairStore, ids: &[usize], used: &HashSet<usize>) -> Vec<(usize, f64)> {
    let mut scored: Vec<(usize, f64)> = ids
        .iter()
        .filter(|i| !used.contains(i))
        .map(|&i| (i, model.predict(&store.pair(i).post)))
        .collect();
    by_score_then_id(&mut scored);
    scored
}

/// Per-target model trained on whether each golden response contains the target.
pub fn train_golden_classifier(target: &str, store: &PairStore, cfg: &TrainConfig<f64>) -> Result<LinearModel<f64>> {
    let examples: Vec<(String, bool)> = store
        .usable(target)
        .into_iter()
        .map(|i| {
            let p = store.pair(i);
            (p.post.clone(), contains_target(&p.golden_response, target))
        })
        .collect();
    let (model, report) = LinearModel::train(&examples, cfg)?;
    if report.one_class {
        return Err(Error::NoQualifyingPost(target.to_string()));
    }
    Ok(model)
}

/// A metered single-turn defender endpoint.
pub trait DefenderApi: Send {
    fn respond(&mut self, post: &str) -> Result<String>;
    fn calls(&self) -> usize;
}

pub struct LocalDefenderApi {
    responder: Arc<dyn Responder>,
    budget: Option<usize>,
    calls: usize,
}

impl LocalDefenderApi {
    pub fn new(responder: Arc<dyn Responder>, budget: Option<usize>) -> Self {
        LocalDefenderApi {
            responder,
            budget,
            calls: 0,
        }
    }
}

impl DefenderApi for LocalDefenderApi {
    fn respond(&mut self, post: &str) -> Result<String> {
        if self.budget.is_some_and(|b| self.calls >= b) {
            return Err(Error::BudgetExhausted);
        }
        self.calls += 1;
        Ok(self.responder.respond(post))
    }

    fn calls(&self) -> usize {
        self.calls
    }
}

#[derive(Clone, Debug)]
pub struct ApiModel {
    pub model: LinearModel<f64>,
    pub one_class: bool,
    pub queries: usize,
    pub positives: usize,
}

/// Queries the defender with up to `budget` posts, labels each by whether
/// the reply contains the target, and trains on those labels.
pub fn api_collect_and_train(
    target: &str,
    posts: &[String],
    api: &mut dyn DefenderApi,
    budget: usize,
    cfg: &TrainConfig<f64>,
) -> Result<ApiModel> {
    if budget == 0 {
        return Err(Error::Config("api budget must be at least 1".into()));
    }
    let mut examples = Vec::new();
    for post in posts.iter().take(budget) {
        let reply = api.respond(post)?;
        examples.push((post.clone(), contains_target(&reply, target)));
    }
    let positives = examples.iter().filter(|(_, y)| *y).count();
    let (model, report) = LinearModel::train(&examples, cfg)?;
    Ok(ApiModel {
        model,
        one_class: report.one_class,
        queries: examples.len(),
        positives,
    })
}

/// Usable posts ordered by similarity to a profile of the target: the word
/// itself plus the posts known to trigger it.
pub fn api_candidates(target: &str, store: &PairStore) -> Vec<usize> {
    let mut profile = target.to_string();
    for i in store.qualifying(target) {
        profile.push(' ');
        profile.push_str(&store.pair(i).post);
    }
    rank_by_relevance(store, &store.usable(target), &profile)
        .into_iter()
        .map(|p| p.0)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChatStrategy {
    TopicLeading,
    GoldenTrigger,
    Classifier,
    Api,
}

pub struct ChatAttacker {
    store: Arc<PairStore>,
    judge: Arc<Judge>,
    strategy: ChatStrategy,
    rng: ChaCha8Rng,
    used: HashSet<usize>,
    train: TrainConfig<f64>,
    model: Option<LinearModel<f64>>,
    api: Option<Box<dyn DefenderApi>>,
    budget: usize,
    one_class: bool,
}

impl ChatAttacker {
    pub fn new(store: Arc<PairStore>, judge: Arc<Judge>, strategy: ChatStrategy, seed: u64) -> Self {
        ChatAttacker {
            store,
            judge,
            strategy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            used: HashSet::new(),
            train: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
            model: None,
            api: None,
            budget: DEFAULT_API_BUDGET,
            one_class: false,
        }
    }

    pub fn with_api(mut self, api: Box<dyn DefenderApi>, budget: usize) -> Self {
        self.api = Some(api);
        self.budget = budget;
        self
    }

    pub fn with_train_config(mut self, cfg: TrainConfig<f64>) -> Self {
        self.train = cfg;
        self
    }

    /// Set when the API labels came out one-class and the model is the prior.
    pub fn one_class(&self) -> bool {
        self.one_class
    }

    fn passes(&self, context: Option<&str>, text: &str, target: &str) -> bool {
        self.judge
            .check_utterance(context, text, Role::Attacker, target)
            .is_ok_and(|v| v.accepted())
    }

    /// First id in `ranked` whose post the judge accepts and that was not
    /// rejected this turn.
    fn first_passing(&self, ranked: &[usize], context: Option<&str>, target: &str, rejected: &HashSet<&str>) -> Option<usize> {
        ranked.iter().copied().find(|&i| {
            let post = &self.store.pair(i).post;
            !rejected.contains(post.as_str()) && self.passes(context, post, target)
        })
    }

    fn select(&mut self, view: &RoleView, target: &str) -> Result<usize> {
        let context = view.last_utterance().map(|u| u.text.clone());
        let ctx = context.as_deref();
        let rejected: HashSet<&str> = view.rejected.iter().map(String::as_str).collect();
        let open = |ids: Vec<usize>| -> Vec<usize> { ids.into_iter().filter(|i| !self.used.contains(i)).collect() };
        let by_relevance = |ids: &[usize]| -> Vec<usize> {
            match ctx {
                Some(c) => rank_by_relevance(&self.store, ids, c).into_iter().map(|p| p.0).collect(),
                None => ids.to_vec(),
            }
        };
        let usable = open(self.store.usable(target));
        let primary: Vec<usize> = match self.strategy {
            ChatStrategy::TopicLeading | ChatStrategy::GoldenTrigger if ctx.is_none() => {
                let mut q = open(self.store.qualifying(target));
                q.shuffle(&mut self.rng);
                q
            }
            ChatStrategy::TopicLeading => by_relevance(&usable),
            ChatStrategy::GoldenTrigger => by_relevance(&open(self.store.qualifying(target))),
            ChatStrategy::Classifier | ChatStrategy::Api => {
                let model = self.model.as_ref().ok_or(Error::Untrained)?;
                rank_by_model(model, &self.store, &usable, &self.used).into_iter().map(|p| p.0).collect()
            }
        };
        if let Some(i) = self.first_passing(&primary, ctx, target, &rejected) {
            return Ok(i);
        }
        let fallback = by_relevance(&usable);
        if let Some(i) = self.first_passing(&fallback, ctx, target, &rejected) {
            return Ok(i);
        }
        fallback
            .into_iter()
            .find(|&i| !rejected.contains(self.store.pair(i).post.as_str()))
            .ok_or(Error::PoolExhausted)
    }
}

impl Agent for ChatAttacker {
    fn name(&self) -> String {
        match self.strategy {
            ChatStrategy::TopicLeading => "chat-topic-leading",
            ChatStrategy::GoldenTrigger => "chat-golden-trigger",
            ChatStrategy::Classifier => "chat-classifier",
            ChatStrategy::Api => "chat-api",
        }
        .to_string()
    }

    fn prepare(&mut self, target: Option<&str>) -> Result<()> {
        let target = target.ok_or(Error::EmptyTarget)?;
        match self.strategy {
            ChatStrategy::TopicLeading | ChatStrategy::GoldenTrigger => {
                if self.store.qualifying(target).is_empty() {
                    return Err(Error::NoQualifyingPost(target.to_string()));
                }
            }
            ChatStrategy::Classifier => {
                self.model = Some(train_golden_classifier(target, &self.store, &self.train)?);
            }
            ChatStrategy::Api => {
                let api = self.api.as_mut().ok_or_else(|| Error::Api("no defender api configured".into()))?;
                let posts: Vec<String> = api_candidates(target, &self.store)
                    .into_iter()
                    .map(|i| self.store.pair(i).post.clone())
                    .collect();
                let trained = api_collect_and_train(target, &posts, api.as_mut(), self.budget, &self.train)?;
                if trained.one_class {
                    tracing::debug!(target, "api labels are one-class; ranking falls back to the prior");
                }
                self.one_class = trained.one_class;
                self.model = Some(trained.model);
            }
        }
        Ok(())
    }

    fn act(&mut self, view: &RoleView) -> Result<AgentAction> {
        let target = view.target.clone().ok_or(Error::EmptyTarget)?;
        let id = self.select(view, &target)?;
        self.used.insert(id);
        Ok(AgentAction::Utter(self.store.pair(id).post.clone()))
    }
}

/// Lexical stand-in for concept attention: nouns near what the attacker
/// keeps talking about accumulate IDF-weighted evidence.
#[derive(Clone, Debug, PartialEq)]
pub struct SuspicionState {
    scores: BTreeMap<String, f64>,
    surface: BTreeMap<String, String>,
    pub guess_threshold: f64,
    /// The lead over the runner-up must exceed this fraction of the top score.
    pub margin_ratio: f64,
}

impl SuspicionState {
    pub fn new(guess_threshold: f64, margin_ratio: f64) -> Self {
        SuspicionState {
            scores: BTreeMap::new(),
            surface: BTreeMap::new(),
            guess_threshold,
            margin_ratio,
        }
    }

    /// Threshold 0.03 and margin 0.1, the values used with a neural decoder.
    pub fn neural_preset() -> Self {
        Self::new(0.03, 0.1)
    }

    pub fn score(&self, lemma: &str) -> f64 {
        self.scores.get(lemma).copied().unwrap_or(0.0)
    }

    pub fn scores(&self) -> &BTreeMap<String, f64> {
        &self.scores
    }

    /// For every noun of the utterance and every graph neighbor of those
    /// nouns: `score += idf * (adjacent utterance lemmas + mentioned)`.
    pub fn update(&mut self, utterance: &str, graph: &ConceptGraph, idf: &IdfTable) {
        let said: BTreeSet<String> = content_lemmas(utterance).into_iter().collect();
        let nouns: Vec<String> = tokenize(utterance).into_iter().filter(|t| is_noun(t)).collect();
        let mut candidates: BTreeMap<String, String> = BTreeMap::new();
        for n in &nouns {
            candidates.entry(lemma(n)).or_insert_with(|| n.clone());
            for nb in graph.one_hop(n) {
                candidates.entry(lemma(&nb)).or_insert(nb);
            }
        }
        for (l, name) in candidates {
            let adjacent = said.iter().filter(|u| graph.adjacent(&name, u)).count();
            let mentioned = usize::from(said.contains(&l));
            let gain = idf.idf(&l) * (adjacent + mentioned) as f64;
            if gain > 0.0 {
                *self.scores.entry(l.clone()).or_insert(0.0) += gain;
                self.surface.entry(l).or_insert(name);
            }
        }
    }

    fn ranked(&self) -> Vec<(&String, f64)> {
        let mut v: Vec<(&String, f64)> = self.scores.iter().map(|(k, &s)| (k, s)).collect();
        v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(b.0)));
        v
    }

    pub fn top(&self) -> Option<(&str, f64)> {
        self.ranked().first().map(|(l, s)| (self.surface[*l].as_str(), *s))
    }

    /// The suspect to guess, if the evidence is strong and unambiguous.
    pub fn should_guess(&self) -> Option<&str> {
        let r = self.ranked();
        let (l, top) = *r.first()?;
        let second = r.get(1).map_or(0.0, |p| p.1);
        (top > self.guess_threshold && top - second > self.margin_ratio * top).then(|| self.surface[l].as_str())
    }

    /// Lemmas scoring above the median by more than the margin.
    pub fn suspicious(&self) -> BTreeSet<String> {
        let Some((_, top)) = self.top() else {
            return BTreeSet::new();
        };
        let values: Vec<f64> = self.scores.values().copied().collect();
        let median = quantile(&values, 0.5).unwrap_or(0.0);
        self.scores
            .iter()
            .filter(|(_, &s)| s > median + self.margin_ratio * top)
            .map(|(l, _)| l.clone())
            .collect()
    }
}

/// Guess threshold: the `q` quantile of the top suspicion score produced by
/// single defender-split posts.
pub fn calibrate_suspicion_threshold(store: &PairStore, graph: &ConceptGraph, q: f64) -> f64 {
    let tops: Vec<f64> = store
        .defender_ids()
        .iter()
        .filter_map(|&i| {
            let mut s = SuspicionState::new(0.0, 0.0);
            s.update(&store.pair(i).post, graph, store.idf());
            s.top().map(|(_, v)| v)
        })
        .collect();
    quantile(&tops, q).unwrap_or(0.0)
}

/// Golden response of the best-matching stored post, skipping responses that
/// mention an avoided lemma or were already rejected.
pub fn chat_respond(post: &str, store: &PairStore, k: usize, avoid: &BTreeSet<String>, rejected: &HashSet<&str>) -> String {
    let hits = store.retrieve(post, k);
    let responses: Vec<&str> = hits.iter().map(|&i| store.pair(i).golden_response.as_str()).collect();
    let fresh: Vec<&str> = responses.into_iter().filter(|r| !rejected.contains(r)).collect();
    fresh
        .iter()
        .find(|r| content_lemmas(r).iter().all(|l| !avoid.contains(l)))
        .or_else(|| fresh.first())
        .map_or_else(|| CHAT_BACKOFF.to_string(), |r| r.to_string())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatDefense {
    pub detect: bool,
    pub prevent: bool,
}

pub struct RetrievalDefender {
    store: Arc<PairStore>,
    graph: Arc<ConceptGraph>,
    defense: ChatDefense,
    k: usize,
    suspicion: SuspicionState,
    updated_turn: Option<u32>,
}

impl RetrievalDefender {
    pub fn new(store: Arc<PairStore>, graph: Arc<ConceptGraph>, defense: ChatDefense, suspicion: SuspicionState) -> Self {
        RetrievalDefender {
            store,
            graph,
            defense,
            k: DEFAULT_RETRIEVE_K,
            suspicion,
            updated_turn: None,
        }
    }

    pub fn suspicion(&self) -> &SuspicionState {
        &self.suspicion
    }
}

impl Agent for RetrievalDefender {
    fn name(&self) -> String {
        let mut n = "chat-retrieval".to_string();
        if self.defense.detect {
            n.push_str("+detect");
        }
        if self.defense.prevent {
            n.push_str("+prevent");
        }
        n
    }

    fn act(&mut self, view: &RoleView) -> Result<AgentAction> {
        let Some(post) = view.last_of(Role::Attacker).map(|u| u.text.clone()) else {
            return Ok(AgentAction::Utter(CHAT_BACKOFF.to_string()));
        };
        if self.updated_turn != Some(view.turn) {
            self.suspicion.update(&post, &self.graph, self.store.idf());
            self.updated_turn = Some(view.turn);
        }
        if self.defense.detect && view.guess_available {
            if let Some(w) = self.suspicion.should_guess() {
                return Ok(AgentAction::Guess(w.to_string()));
            }
        }
        let avoid = if self.defense.prevent {
            self.suspicion.suspicious()
        } else {
            BTreeSet::new()
        };
        let rejected: HashSet<&str> = view.rejected.iter().map(String::as_str).collect();
        Ok(AgentAction::Utter(chat_respond(&post, &self.store, self.k, &avoid, &rejected)))
    }

    fn forced_guess(&mut self, _view: &RoleView) -> Option<String> {
        self.suspicion.top().map(|(w, _)| w.to_string())
    }
}

/// The undefended retrieval chatbot as a stateless responder.
pub struct RetrievalResponder {
    store: Arc<PairStore>,
    k: usize,
}

impl RetrievalResponder {
    pub fn new(store: Arc<PairStore>) -> Self {
        RetrievalResponder {
            store,
            k: DEFAULT_RETRIEVE_K,
        }
    }
}

impl Responder for RetrievalResponder {
    fn respond(&self, post: &str) -> String {
        chat_respond(post, &self.store, self.k, &BTreeSet::new(), &HashSet::new())
    }
}
