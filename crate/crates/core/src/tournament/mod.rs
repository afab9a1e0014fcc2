//! Tournament runner: loads a TOML config, builds shared resources once,
//! plays `words x rounds` seeded games in parallel and writes transcripts and
//! reports.

pub mod stats;

use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::chat::{
    calibrate_suspicion_threshold, ChatAttacker, ChatDefense, ChatStrategy, LocalDefenderApi, PairStore,
    RetrievalDefender, RetrievalResponder, SuspicionState, DEFAULT_API_BUDGET,
};
use crate::agents::qa::{calibrate_thresholds, AttackMode, DefenseMode, QaAttacker, QaDefender, QaDefenderConfig, Thresholds};
use crate::agents::scripted::{Script, ScriptedDefender};
use crate::agents::{Agent, AgentAction, Responder};
use crate::classifier::fnv1a;
use crate::corpus::lm::{LmConfig, NGramLm};
use crate::corpus::pairs::load_pairs;
use crate::corpus::select::ConcretenessTable;
use crate::corpus::text::{split_sentences, tokenize};
use crate::corpus::{ingest_corpus, Corpus, Format, IdfTable};
use crate::error::{Error, Result};
use crate::game::{AbortPolicy, GameConfig, GameState, Role};
use crate::graph::ConceptGraph;
use crate::judge::{calibrate_perplexity_ceiling, train_relevance_model, Judge, JudgeConfig, RelevanceMode, RelevanceTraining};
use crate::transcript::{StartRecord, Transcript};

pub use stats::{aggregate, concreteness_analysis, pearson, StatsReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    QaDirect,
    QaIndirect,
    QaNoDefense,
    QaDetection,
    QaPrevention,
    ChatTopicLeading,
    ChatGoldenTrigger,
    ChatClassifier,
    ChatApi,
    ChatRetrieval,
    Scripted,
}

impl AgentKind {
    pub fn role(self) -> Role {
        use AgentKind::*;
        match self {
            QaDirect | QaIndirect | ChatTopicLeading | ChatGoldenTrigger | ChatClassifier | ChatApi => Role::Attacker,
            QaNoDefense | QaDetection | QaPrevention | ChatRetrieval | Scripted => Role::Defender,
        }
    }

    pub fn as_str(self) -> &'static str {
        use AgentKind::*;
        match self {
            QaDirect => "qa-direct",
            QaIndirect => "qa-indirect",
            QaNoDefense => "qa-no-defense",
            QaDetection => "qa-detection",
            QaPrevention => "qa-prevention",
            ChatTopicLeading => "chat-topic-leading",
            ChatGoldenTrigger => "chat-golden-trigger",
            ChatClassifier => "chat-classifier",
            ChatApi => "chat-api",
            ChatRetrieval => "chat-retrieval",
            Scripted => "scripted",
        }
    }
}

/// Agent kind plus optional knobs; unset knobs fall back to presets or
/// calibrated values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub kind: AgentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieve_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detect: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prevent: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guess_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin_ratio: Option<f64>,
    /// Responder behind the local defender API of `chat-api`; defaults to
    /// the opposing defender.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_defender: Option<AgentKind>,
}

impl AgentSpec {
    pub fn new(kind: AgentKind) -> Self {
        AgentSpec {
            kind,
            bias: None,
            c1: None,
            c2: None,
            c3: None,
            retrieve_k: None,
            budget: None,
            detect: None,
            prevent: None,
            guess_threshold: None,
            margin_ratio: None,
            api_defender: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Plain text, or a `.json` corpus written by `ingest`.
    pub corpus: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub script: Option<PathBuf>,
    pub concreteness: Option<PathBuf>,
}

impl DataSection {
    /// Joins relative paths onto `base`.
    pub fn resolve(&mut self, base: &Path) {
        for p in [&mut self.corpus, &mut self.pairs, &mut self.graph, &mut self.script, &mut self.concreteness]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

/// Judge overrides; a missing ceiling is calibrated on held-out sentences.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeSection {
    pub perplexity_ceiling: Option<f64>,
    pub relevance_floor: Option<f64>,
    pub max_retries: Option<u32>,
    pub relevance_mode: Option<RelevanceMode>,
    pub forbid_attacker_target: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Calibration {
    pub ceiling_quantile: f64,
    pub ceiling_folds: usize,
    pub qa_probes: usize,
    pub suspicion_quantile: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            ceiling_quantile: 0.95,
            ceiling_folds: 5,
            qa_probes: 200,
            suspicion_quantile: 0.9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameSection {
    pub max_turns: u32,
    pub abort_policy: AbortPolicy,
}

impl Default for GameSection {
    fn default() -> Self {
        GameSection {
            max_turns: 10,
            abort_policy: AbortPolicy::Separate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TournamentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub rounds: u32,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default)]
    pub words: Vec<String>,
    /// One word per line, appended to `words`.
    #[serde(default)]
    pub words_file: Option<PathBuf>,
    #[serde(default)]
    pub game: GameSection,
    #[serde(default)]
    pub judge: JudgeSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub calibration: Calibration,
    pub attacker: AgentSpec,
    pub defender: AgentSpec,
}

fn one() -> u32 {
    1
}

impl TournamentConfig {
    /// Parses TOML; relative paths are taken from `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: TournamentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.data.resolve(base);
        if let Some(p) = &mut cfg.words_file {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.game.max_turns == 0 {
            return Err(Error::Config("rounds and max_turns must be at least 1".into()));
        }
        if self.attacker.kind.role() != Role::Attacker {
            return Err(Error::Config(format!("{} cannot attack", self.attacker.kind.as_str())));
        }
        if self.defender.kind.role() != Role::Defender {
            return Err(Error::Config(format!("{} cannot defend", self.defender.kind.as_str())));
        }
        Ok(())
    }

    pub fn word_list(&self) -> Result<Vec<String>> {
        read_word_list(&self.words, self.words_file.as_deref())
    }

    pub fn game_config(&self, judge: &JudgeConfig) -> GameConfig {
        GameConfig {
            max_turns: self.game.max_turns,
            judge: judge.clone(),
            abort_policy: self.game.abort_policy,
        }
    }
}

/// Inline words followed by the words file, blank lines and `#` comments
/// dropped.
pub fn read_word_list(inline: &[String], file: Option<&Path>) -> Result<Vec<String>> {
    let mut words = inline.to_vec();
    if let Some(p) = file {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        words.extend(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| l.split_whitespace().next().unwrap_or(l).to_lowercase()),
        );
    }
    if words.is_empty() {
        return Err(Error::Config("no target words".into()));
    }
    Ok(words)
}

/// Everything loaded or trained once and shared read-only by all games.
pub struct Resources {
    pub corpus: Option<Arc<Corpus>>,
    pub store: Option<Arc<PairStore>>,
    pub graph: Arc<ConceptGraph>,
    pub judge: Arc<Judge>,
    pub script: Option<Script>,
    pub concreteness: Option<ConcretenessTable>,
    calibration: Calibration,
    seed: u64,
    thresholds: OnceLock<std::result::Result<Thresholds, String>>,
    suspicion: OnceLock<f64>,
}

impl Resources {
    pub fn load(data: &DataSection, judge: &JudgeSection, calibration: &Calibration, seed: u64) -> Result<Self> {
        let corpus = match &data.corpus {
            Some(p) if p.extension().is_some_and(|e| e == "json") => Some(Arc::new(Corpus::load_json(p)?)),
            Some(p) => Some(Arc::new(ingest_corpus(p, Format::PlainText)?)),
            None => None,
        };
        let store = match &data.pairs {
            Some(p) => Some(Arc::new(PairStore::new(load_pairs(p)?)?)),
            None => None,
        };
        if corpus.is_none() && store.is_none() {
            return Err(Error::Config("[data] needs a corpus or pairs".into()));
        }
        let graph = match &data.graph {
            Some(p) => ConceptGraph::load_csv(p)?,
            None => ConceptGraph::from_edges(Vec::new()),
        };
        let script = data.script.as_deref().map(Script::load).transpose()?;
        let concreteness = data.concreteness.as_deref().map(ConcretenessTable::load).transpose()?;

        let mut sentences: Vec<String> = Vec::new();
        let mut idf_texts: Vec<&str> = Vec::new();
        if let Some(c) = &corpus {
            sentences.extend(c.sentences().iter().map(|s| s.text.clone()));
            idf_texts.extend(c.paragraph_texts());
        }
        if let Some(s) = &store {
            for p in s.pairs() {
                sentences.extend(split_sentences(&p.post));
                sentences.extend(split_sentences(&p.golden_response));
                idf_texts.push(&p.post);
                idf_texts.push(&p.golden_response);
            }
        }
        let lm_cfg = LmConfig::default();
        let ceiling = match judge.perplexity_ceiling {
            Some(c) => c,
            None => calibrate_perplexity_ceiling(
                &sentences,
                &lm_cfg,
                calibration.ceiling_folds,
                calibration.ceiling_quantile,
            )?,
        };
        let defaults = JudgeConfig::default();
        let judge_cfg = JudgeConfig {
            perplexity_ceiling: ceiling,
            relevance_floor: judge.relevance_floor.unwrap_or(defaults.relevance_floor),
            max_retries: judge.max_retries.unwrap_or(defaults.max_retries),
            relevance_mode: judge.relevance_mode.unwrap_or(defaults.relevance_mode),
            forbid_attacker_target: judge.forbid_attacker_target.unwrap_or(defaults.forbid_attacker_target),
        };
        let lm = NGramLm::train(&sentences, &lm_cfg)?;
        let idf = IdfTable::from_texts(idf_texts);
        let mut j = Judge::new(judge_cfg.clone(), lm, idf)?;
        if judge_cfg.relevance_mode == RelevanceMode::Learned {
            let pairs: Vec<(String, String)> = match (&store, &corpus) {
                (Some(s), _) => s.pairs().iter().map(|p| (p.post.clone(), p.golden_response.clone())).collect(),
                (None, Some(c)) => c
                    .sentences()
                    .windows(2)
                    .filter(|w| w[0].paragraph == w[1].paragraph)
                    .map(|w| (w[0].text.clone(), w[1].text.clone()))
                    .collect(),
                (None, None) => Vec::new(),
            };
            let training = RelevanceTraining {
                seed,
                ..RelevanceTraining::default()
            };
            j = j.with_relevance_model(train_relevance_model(&pairs, &training)?);
        }
        Ok(Resources {
            corpus,
            store,
            graph: Arc::new(graph),
            judge: Arc::new(j),
            script,
            concreteness,
            calibration: calibration.clone(),
            seed,
            thresholds: OnceLock::new(),
            suspicion: OnceLock::new(),
        })
    }

    pub fn for_tournament(cfg: &TournamentConfig) -> Result<Self> {
        Self::load(&cfg.data, &cfg.judge, &cfg.calibration, cfg.seed)
    }

    pub fn judge_config(&self) -> &JudgeConfig {
        self.judge.config()
    }

    fn corpus(&self, kind: AgentKind) -> Result<Arc<Corpus>> {
        self.corpus
            .clone()
            .ok_or_else(|| Error::Config(format!("{} needs [data].corpus", kind.as_str())))
    }

    fn store(&self, kind: AgentKind) -> Result<Arc<PairStore>> {
        self.store
            .clone()
            .ok_or_else(|| Error::Config(format!("{} needs [data].pairs", kind.as_str())))
    }

    /// QA confidence thresholds calibrated on first use.
    pub fn qa_thresholds(&self) -> Result<Thresholds> {
        let corpus = self.corpus(AgentKind::QaDetection)?;
        self.thresholds
            .get_or_init(|| calibrate_thresholds(&corpus, 3, self.calibration.qa_probes, self.seed).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Config)
    }

    pub fn suspicion_threshold(&self) -> Result<f64> {
        let store = self.store(AgentKind::ChatRetrieval)?;
        Ok(*self
            .suspicion
            .get_or_init(|| calibrate_suspicion_threshold(&store, &self.graph, self.calibration.suspicion_quantile)))
    }

    pub fn responder(&self, kind: AgentKind) -> Result<Arc<dyn Responder>> {
        match kind {
            AgentKind::Scripted => Ok(Arc::new(ScriptedDefender::new(self.script(kind)?))),
            AgentKind::ChatRetrieval => Ok(Arc::new(RetrievalResponder::new(self.store(kind)?))),
            other => Err(Error::Config(format!("{} cannot back the defender API", other.as_str()))),
        }
    }

    fn script(&self, kind: AgentKind) -> Result<Script> {
        self.script
            .clone()
            .ok_or_else(|| Error::Config(format!("{} needs [data].script", kind.as_str())))
    }

    /// Builds an agent for `role`. `opponent` backs the `chat-api` defender
    /// API when `api_defender` is unset.
    pub fn build_agent(&self, spec: &AgentSpec, role: Role, opponent: Option<&AgentSpec>, seed: u64) -> Result<Box<dyn Agent>> {
        let kind = spec.kind;
        if kind.role() != role {
            return Err(Error::Config(format!("{} cannot play {role:?}", kind.as_str())));
        }
        Ok(match kind {
            AgentKind::QaDirect | AgentKind::QaIndirect => {
                let mode = if kind == AgentKind::QaDirect { AttackMode::Direct } else { AttackMode::Indirect };
                let bias = spec.bias.unwrap_or(0.6);
                if !(0.0..=1.0).contains(&bias) {
                    return Err(Error::Config("bias must lie in [0, 1]".into()));
                }
                Box::new(QaAttacker::new(self.corpus(kind)?, self.graph.clone(), self.judge.clone(), mode, bias, seed))
            }
            AgentKind::QaNoDefense | AgentKind::QaDetection | AgentKind::QaPrevention => {
                let mode = match kind {
                    AgentKind::QaNoDefense => DefenseMode::NoDefense,
                    AgentKind::QaDetection => DefenseMode::Detection,
                    _ => DefenseMode::Prevention,
                };
                let (c1, c2, c3) = match (spec.c1, spec.c2, spec.c3) {
                    (Some(a), Some(b), Some(c)) => (a, b, c),
                    (a, b, c) => {
                        let t = self.qa_thresholds()?;
                        (a.unwrap_or(t.c1), b.unwrap_or(t.c2), c.unwrap_or(t.c3))
                    }
                };
                let cfg = QaDefenderConfig {
                    c1,
                    c2,
                    c3,
                    retrieve_k: spec.retrieve_k.unwrap_or(3),
                    mode,
                };
                Box::new(QaDefender::new(self.corpus(kind)?, cfg)?)
            }
            AgentKind::ChatTopicLeading | AgentKind::ChatGoldenTrigger | AgentKind::ChatClassifier | AgentKind::ChatApi => {
                let strategy = match kind {
                    AgentKind::ChatTopicLeading => ChatStrategy::TopicLeading,
                    AgentKind::ChatGoldenTrigger => ChatStrategy::GoldenTrigger,
                    AgentKind::ChatClassifier => ChatStrategy::Classifier,
                    _ => ChatStrategy::Api,
                };
                let attacker = ChatAttacker::new(self.store(kind)?, self.judge.clone(), strategy, seed);
                if strategy == ChatStrategy::Api {
                    let backing = spec
                        .api_defender
                        .or(opponent.map(|o| o.kind))
                        .ok_or_else(|| Error::Config("chat-api needs api_defender or an opponent".into()))?;
                    let budget = spec.budget.unwrap_or(DEFAULT_API_BUDGET);
                    let api = LocalDefenderApi::new(self.responder(backing)?, Some(budget));
                    Box::new(attacker.with_api(Box::new(api), budget))
                } else {
                    Box::new(attacker)
                }
            }
            AgentKind::ChatRetrieval => {
                let defense = ChatDefense {
                    detect: spec.detect.unwrap_or(true),
                    prevent: spec.prevent.unwrap_or(false),
                };
                let threshold = match spec.guess_threshold {
                    Some(t) => t,
                    None => self.suspicion_threshold()?,
                };
                let suspicion = SuspicionState::new(threshold, spec.margin_ratio.unwrap_or(0.1));
                Box::new(RetrievalDefender::new(self.store(kind)?, self.graph.clone(), defense, suspicion))
            }
            AgentKind::Scripted => Box::new(ScriptedDefender::new(self.script(kind)?)),
        })
    }
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of one game, a pure function of the master seed, the word and the
/// round.
pub fn game_seed(master: u64, word: &str, round: u32) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a(word.as_bytes())) ^ u64::from(round))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSpec {
    pub word_index: usize,
    pub word: String,
    pub round: u32,
    pub seed: u64,
}

impl GameSpec {
    /// `{index:03}_{word}_r{round}.jsonl`
    pub fn file_name(&self) -> String {
        format!("{:03}_{}_r{}.jsonl", self.word_index, self.word, self.round)
    }
}

pub fn schedule(master: u64, words: &[String], rounds: u32) -> Vec<GameSpec> {
    words
        .iter()
        .enumerate()
        .flat_map(|(i, w)| {
            (0..rounds).map(move |r| GameSpec {
                word_index: i,
                word: w.clone(),
                round: r,
                seed: game_seed(master, w, r),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedWord {
    pub word: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GameResult {
    Played(Transcript),
    Skipped(SkippedWord),
}

fn no_material(e: &Error) -> bool {
    matches!(e, Error::NoSentence(_) | Error::NoQualifyingPost(_) | Error::PoolExhausted)
}

/// Plays one move for `role`: the forced guess when the horizon is reached,
/// otherwise the agent's next action. Agent failures abort the game.
pub fn step(state: &mut GameState, judge: &Judge, role: Role, agent: &mut dyn Agent) -> Result<()> {
    if state.awaiting_forced_guess() {
        let g = agent.forced_guess(&state.view(Role::Defender));
        state.finalize_at_horizon(g.as_deref())?;
        return Ok(());
    }
    let view = state.view(role);
    match agent.act(&view) {
        Err(e) => {
            state.abort(role, &e.to_string())?;
        }
        Ok(AgentAction::Utter(text)) if tokenize(&text).is_empty() => {
            state.abort(role, "empty utterance")?;
        }
        Ok(AgentAction::Utter(text)) => {
            state.submit_utterance(judge, role, &text)?;
        }
        Ok(AgentAction::Guess(word)) if role == Role::Defender && view.guess_available => {
            state.submit_guess(&word)?;
        }
        Ok(AgentAction::Guess(_)) => {
            state.abort(role, "guess not allowed")?;
        }
    }
    Ok(())
}

/// The role whose move is pending, counting the forced guess as the defender's.
pub fn pending_role(state: &GameState) -> Option<Role> {
    if state.is_finished() {
        None
    } else if state.awaiting_forced_guess() {
        Some(Role::Defender)
    } else {
        Some(state.next_to_act())
    }
}

/// Drives two agents through one game until an outcome.
pub fn drive(state: &mut GameState, judge: &Judge, attacker: &mut dyn Agent, defender: &mut dyn Agent) -> Result<()> {
    while let Some(role) = pending_role(state) {
        let agent: &mut dyn Agent = match role {
            Role::Attacker => &mut *attacker,
            Role::Defender => &mut *defender,
        };
        step(state, judge, role, agent)?;
    }
    Ok(())
}

pub fn play_game(res: &Resources, cfg: &TournamentConfig, spec: &GameSpec) -> Result<GameResult> {
    let mut attacker = res.build_agent(&cfg.attacker, Role::Attacker, Some(&cfg.defender), splitmix64(spec.seed ^ 1))?;
    let mut defender = res.build_agent(&cfg.defender, Role::Defender, Some(&cfg.attacker), splitmix64(spec.seed ^ 2))?;
    if let Err(e) = attacker.prepare(Some(&spec.word)) {
        if no_material(&e) {
            return Ok(GameResult::Skipped(SkippedWord {
                word: spec.word.clone(),
                reason: e.to_string(),
            }));
        }
        return Err(e);
    }
    defender.prepare(None)?;
    let judge_cfg = res.judge_config().clone();
    let mut state = GameState::new(cfg.game_config(&judge_cfg), &spec.word)?;
    drive(&mut state, &res.judge, attacker.as_mut(), defender.as_mut())?;
    let start = StartRecord {
        target: spec.word.clone(),
        max_turns: cfg.game.max_turns,
        seed: spec.seed,
        abort_policy: cfg.game.abort_policy,
        judge: judge_cfg,
        attacker: attacker.name(),
        defender: defender.name(),
        word_index: spec.word_index,
        round: spec.round,
    };
    Ok(GameResult::Played(Transcript::from_game(start, &state)?))
}

pub struct RunOutput {
    pub games: Vec<(GameSpec, Transcript)>,
    pub skipped: Vec<SkippedWord>,
    pub report: StatsReport,
}

/// Plays every scheduled game; results keep schedule order whatever the
/// thread count.
pub fn run(cfg: &TournamentConfig, res: &Resources) -> Result<RunOutput> {
    let words = cfg.word_list()?;
    let specs = schedule(cfg.seed, &words, cfg.rounds);
    // Fail on construction problems before any game runs.
    res.build_agent(&cfg.attacker, Role::Attacker, Some(&cfg.defender), 0)?;
    res.build_agent(&cfg.defender, Role::Defender, Some(&cfg.attacker), 0)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<Result<GameResult>> = pool.install(|| specs.par_iter().map(|s| play_game(res, cfg, s)).collect());
    let mut games = Vec::new();
    let mut skipped: Vec<SkippedWord> = Vec::new();
    for (spec, r) in specs.into_iter().zip(results) {
        match r? {
            GameResult::Played(t) => games.push((spec, t)),
            GameResult::Skipped(s) => {
                if !skipped.iter().any(|k| k.word == s.word) {
                    tracing::warn!(word = %s.word, reason = %s.reason, "skipping word");
                    skipped.push(s);
                }
            }
        }
    }
    if games.is_empty() {
        return Err(Error::Config("every target word was skipped".into()));
    }
    let transcripts: Vec<Transcript> = games.iter().map(|g| g.1.clone()).collect();
    let names: Vec<String> = skipped.iter().map(|s| s.word.clone()).collect();
    let mut report = aggregate(&transcripts, &names)?;
    if let Some(t) = &res.concreteness {
        report = report.with_concreteness(t, 4)?;
    }
    Ok(RunOutput { games, skipped, report })
}

impl RunOutput {
    pub fn transcripts(&self) -> impl Iterator<Item = &Transcript> {
        self.games.iter().map(|g| &g.1)
    }

    /// `dir/transcripts/*.jsonl`, `dir/skipped.json` and the reports.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let tdir = dir.join("transcripts");
        std::fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
        let mut paths = Vec::with_capacity(self.games.len());
        for (spec, t) in &self.games {
            let p = tdir.join(spec.file_name());
            t.write(&p)?;
            paths.push(p);
        }
        let sp = dir.join("skipped.json");
        let body = serde_json::to_string_pretty(&self.skipped).expect("skipped list serializes");
        std::fs::write(&sp, body + "\n").map_err(|e| Error::io(&sp, e))?;
        self.report.write(dir)?;
        Ok(paths)
    }
}

/// Reads every `*.jsonl` under `dir`, sorted by file name.
pub fn read_transcripts(dir: &Path) -> Result<Vec<(PathBuf, Transcript)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    paths.into_iter().map(|p| Transcript::read(&p).map(|t| (p, t))).collect()
}

/// The skipped list written next to a transcript directory, if any.
pub fn read_skipped(transcript_dir: &Path) -> Result<Vec<SkippedWord>> {
    let Some(parent) = transcript_dir.parent() else {
        return Ok(Vec::new());
    };
    let p = parent.join("skipped.json");
    if !p.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed {
        line: e.line(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(game_seed(7, "banana", 2), game_seed(7, "banana", 2));
        assert_ne!(game_seed(7, "banana", 2), game_seed(7, "banana", 3));
        assert_ne!(game_seed(7, "banana", 2), game_seed(8, "banana", 2));
        let s = schedule(1, &["a".into(), "b".into()], 3);
        assert_eq!(s.len(), 6);
        assert_eq!(s[4].file_name(), "001_b_r1.jsonl");
    }

    #[test]
    fn config_rejects_role_mixups() {
        let bad = "[attacker]\nkind = \"scripted\"\n[defender]\nkind = \"qa-detection\"\n";
        assert!(matches!(TournamentConfig::parse(bad, Path::new(".")), Err(Error::Config(_))));
        let typo = "[attacker]\nkind = \"qa-sideways\"\n[defender]\nkind = \"scripted\"\n";
        assert!(TournamentConfig::parse(typo, Path::new(".")).is_err());
        let ok = "words = [\"x\"]\n[data]\ncorpus = \"c.txt\"\n[attacker]\nkind = \"qa-direct\"\n[defender]\nkind = \"scripted\"\n";
        let cfg = TournamentConfig::parse(ok, Path::new("/base")).unwrap();
        assert_eq!(cfg.data.corpus.as_deref(), Some(Path::new("/base/c.txt")));
        assert_eq!(cfg.rounds, 1);
    }
}
