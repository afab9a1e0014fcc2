//! Question-answering players: a cloze-question attacker (direct or walking
//! the concept graph) and a retrieve-and-extract defender that can detect
//! the target and avoid answering with it.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::nouns::{is_noun, WhWord};
use crate::corpus::text::{content_lemmas, is_content, lemma, lemmas, tokenize_spans};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::game::{Role, RoleView};
use crate::graph::ConceptGraph;
use crate::judge::{contains_target, cosine, Judge};
use crate::scalar::{quantile, Scalar};

use super::{Agent, AgentAction};

pub const BACKOFF: &str = "I am not sure.";

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "its", "their", "his", "her", "my", "our", "your",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub paragraph: usize,
    pub sentence: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RankedAnswer<S> {
    pub span: String,
    /// Space-joined lemmas of the span; answers are keyed by it.
    pub lemma: String,
    pub s_start: S,
    pub s_end: S,
    pub confidence: S,
    pub source: SourceRef,
}

impl<S: Scalar> RankedAnswer<S> {
    /// `confidence = exp(s_start + s_end)`.
    pub fn new(span: impl Into<String>, s_start: S, s_end: S, source: SourceRef) -> Self {
        let span = span.into();
        RankedAnswer {
            lemma: lemmas(&span).join(" "),
            span,
            s_start,
            s_end,
            confidence: (s_start + s_end).exp(),
            source,
        }
    }

    fn lemma_set(&self) -> BTreeSet<&str> {
        self.lemma.split(' ').collect()
    }
}

/// Turns a sentence into a question about `focus` by replacing the focus
/// (and its determiner) with a wh-word. `None` when the sentence does not
/// mention the focus as a plain token or the question would still
/// mention it.
pub fn cloze_question(sentence: &str, focus: &str) -> Option<String> {
    let want = lemmas(focus);
    if want.is_empty() {
        return None;
    }
    let spans = tokenize_spans(sentence);
    let ls: Vec<String> = spans.iter().map(|s| lemma(&s.lower)).collect();
    let i = ls.windows(want.len()).position(|w| w == want.as_slice())?;
    let end = i + want.len() - 1;
    if spans[end].lower.contains('\'') || spans[end].lower.contains('\u{2019}') {
        return None;
    }
    let mut start = i;
    for j in (i.saturating_sub(3)..i).rev() {
        let t = spans[j].lower.as_str();
        if DETERMINERS.contains(&t) {
            start = j;
            break;
        }
        if !is_content(t) || sentence[spans[j].end..spans[j + 1].start].trim().len() > 0 {
            break;
        }
    }
    let wh = WhWord::for_noun(&spans[end].lower).as_str();
    let mut q = format!("{}{}{}", &sentence[..spans[start].start], wh, &sentence[spans[end].end..]);
    q = q.trim().trim_end_matches(['.', '!', '?']).trim_end().to_string();
    q.push('?');
    let mut chars = q.chars();
    let q = match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => return None,
    };
    (!contains_target(&q, focus)).then_some(q)
}

/// Every distinct cloze question about `focus`, with its sentence index.
pub fn question_candidates(focus: &str, corpus: &Corpus) -> Vec<(usize, String)> {
    let Some(first) = lemmas(focus).into_iter().next() else {
        return Vec::new();
    };
    let mut seen = HashSet::new();
    corpus
        .sentences_with(&first)
        .iter()
        .filter_map(|&sid| cloze_question(&corpus.sentences()[sid].text, focus).map(|q| (sid, q)))
        .filter(|(_, q)| seen.insert(q.clone()))
        .collect()
}

/// A question built from a randomly chosen sentence mentioning `focus`.
pub fn generate_question<R: Rng + ?Sized>(focus: &str, corpus: &Corpus, rng: &mut R) -> Result<String> {
    question_candidates(focus, corpus)
        .choose(rng)
        .map(|(_, q)| q.clone())
        .ok_or_else(|| Error::NoSentence(focus.to_string()))
}

/// The defender's reply: the question with its wh-word replaced by the
/// answer, as a statement.
pub fn answer_utterance(question: &str, span: &str) -> String {
    let spans = tokenize_spans(question);
    let body = question.trim().trim_end_matches(['?', '.', '!']).trim_end();
    let text = match spans.iter().find(|s| matches!(s.lower.as_str(), "what" | "who" | "where" | "which")) {
        Some(s) if s.end <= body.len() => format!("{}the {}{}", &body[..s.start], span, &body[s.end..]),
        _ => return format!("The answer is the {span}."),
    };
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => format!("{}{}.", c.to_uppercase(), chars.as_str()),
        None => BACKOFF.to_string(),
    }
}

/// Retrieves the top `k` paragraphs and scores noun spans of their
/// sentences. `s_start` sums the IDF of question lemmas before the span,
/// `s_end` those after it that were not already counted.
pub fn extract_answers<S: Scalar>(question: &str, corpus: &Corpus, k: usize) -> Vec<RankedAnswer<S>> {
    let hits = corpus.bm25().retrieve(question, k);
    let qset: BTreeSet<String> = content_lemmas(question).into_iter().collect();
    let idf = corpus.idf();
    let mut best: BTreeMap<String, (usize, RankedAnswer<S>)> = BTreeMap::new();
    let mut order = 0usize;
    for hit in hits {
        for sid in corpus.sentences_of_paragraph(hit.unit) {
            let sentence = &corpus.sentences()[sid];
            let spans = tokenize_spans(&sentence.text);
            let ls: Vec<String> = spans.iter().map(|s| lemma(&s.lower)).collect();
            let nounish = |p: usize| is_noun(&spans[p].lower) && !qset.contains(&ls[p]);
            for p in 0..spans.len() {
                if !nounish(p) {
                    continue;
                }
                for e in [p + 1, p + 2] {
                    if e > spans.len() || (e == p + 2 && !nounish(p + 1)) {
                        continue;
                    }
                    let before: BTreeSet<&String> = ls[..p].iter().filter(|l| qset.contains(*l)).collect();
                    let after: BTreeSet<&String> = ls[e..]
                        .iter()
                        .filter(|l| qset.contains(*l) && !before.contains(l))
                        .collect();
                    let s_start: f64 = before.iter().map(|l| idf.idf(l)).sum();
                    let s_end: f64 = after.iter().map(|l| idf.idf(l)).sum();
                    let span = spans[p..e].iter().map(|s| s.lower.as_str()).collect::<Vec<_>>().join(" ");
                    let a = RankedAnswer::new(
                        span,
                        S::of(s_start),
                        S::of(s_end),
                        SourceRef {
                            paragraph: hit.unit,
                            sentence: sid,
                        },
                    );
                    match best.get_mut(&a.lemma) {
                        Some((_, old)) if old.confidence >= a.confidence => {}
                        Some((_, old)) => *old = a,
                        None => {
                            best.insert(a.lemma.clone(), (order, a));
                            order += 1;
                        }
                    }
                }
            }
        }
    }
    let mut out: Vec<(usize, RankedAnswer<S>)> = best.into_values().collect();
    out.sort_by(|(oa, a), (ob, b)| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(oa.cmp(ob))
    });
    out.into_iter().map(|(_, a)| a).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefenseMode {
    #[default]
    NoDefense,
    Detection,
    Prevention,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaDefenderConfig {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub retrieve_k: usize,
    pub mode: DefenseMode,
}

impl QaDefenderConfig {
    /// Thresholds used with a fine-tuned BERT reader.
    pub fn bert_preset(mode: DefenseMode) -> Self {
        QaDefenderConfig {
            c1: 10.0,
            c2: 1.0,
            c3: 1e4,
            retrieve_k: 3,
            mode,
        }
    }

    /// Thresholds used with a DocQA reader.
    pub fn docqa_preset(mode: DefenseMode) -> Self {
        QaDefenderConfig {
            c1: 1e3,
            c2: 1e5,
            c3: 1e6,
            retrieve_k: 3,
            mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.c1, self.c2, self.c3].iter().all(|c| c.is_finite() && *c > 0.0) && self.retrieve_k >= 1 {
            Ok(())
        } else {
            Err(Error::Config("c1, c2, c3 must be positive and retrieve_k at least 1".into()))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Confidence thresholds from random bag-of-words probe questions:
/// `c1` is the 90th percentile of the top confidence, `c2` the median and
/// `c3 = 3 * c1`.
pub fn calibrate_thresholds(corpus: &Corpus, k: usize, probes: usize, seed: u64) -> Result<Thresholds> {
    let vocab: Vec<&String> = corpus
        .token_frequencies()
        .keys()
        .filter(|t| is_content(t) && t.chars().all(char::is_alphabetic))
        .collect();
    if vocab.len() < 3 {
        return Err(Error::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tops: Vec<f64> = (0..probes)
        .filter_map(|_| {
            let words: Vec<&str> = vocab.choose_multiple(&mut rng, 3).map(|w| w.as_str()).collect();
            let q = format!("what {}?", words.join(" "));
            extract_answers::<f64>(&q, corpus, k).first().map(|a| a.confidence)
        })
        .collect();
    let c1 = quantile(&tops, 0.9).ok_or(Error::EmptyCorpus)?;
    let c2 = quantile(&tops, 0.5).ok_or(Error::EmptyCorpus)?;
    Ok(Thresholds { c1, c2, c3: 3.0 * c1 })
}

/// Index into the answer list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Choice {
    Guess(usize),
    Utter(usize),
}

/// Confidence of the top answer accumulated per lemma across turns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Accumulator {
    totals: BTreeMap<String, f64>,
    surface: BTreeMap<String, String>,
}

impl Accumulator {
    pub fn add<S: Scalar>(&mut self, top: &RankedAnswer<S>) {
        *self.totals.entry(top.lemma.clone()).or_insert(0.0) += top.confidence.to_f64_lossy();
        self.surface.entry(top.lemma.clone()).or_insert_with(|| top.span.clone());
    }

    pub fn get(&self, lemma: &str) -> f64 {
        self.totals.get(lemma).copied().unwrap_or(0.0)
    }

    /// Surface form of the lemma with the largest total.
    pub fn leader(&self) -> Option<&str> {
        let mut best: Option<(&String, f64)> = None;
        for (l, &v) in &self.totals {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((l, v));
            }
        }
        best.map(|(l, _)| self.surface[l].as_str())
    }
}

/// Picks an action given this turn's answers. `skip` marks answers that may
/// not be uttered (already rejected this turn).
pub fn choose<S: Scalar>(
    answers: &[RankedAnswer<S>],
    cfg: &QaDefenderConfig,
    acc: &Accumulator,
    guess_available: bool,
    skip: impl Fn(&RankedAnswer<S>) -> bool,
) -> Option<Choice> {
    let a1 = answers.first()?;
    let conf1 = a1.confidence.to_f64_lossy();
    let first_open = || (0..answers.len()).find(|&i| !skip(&answers[i]));
    match cfg.mode {
        DefenseMode::NoDefense => first_open().map(Choice::Utter),
        DefenseMode::Detection => {
            if guess_available && conf1 > cfg.c1 {
                Some(Choice::Guess(0))
            } else {
                first_open().map(Choice::Utter)
            }
        }
        DefenseMode::Prevention => {
            if guess_available && acc.get(&a1.lemma) > cfg.c3 && conf1 > cfg.c1 {
                return Some(Choice::Guess(0));
            }
            let top = a1.lemma_set();
            let alt = (1..answers.len()).find(|&i| {
                let a = &answers[i];
                !skip(a) && a.lemma_set().is_disjoint(&top) && a.confidence.to_f64_lossy() > cfg.c2
            });
            alt.or_else(first_open).map(Choice::Utter)
        }
    }
}

/// Adds this turn's top answer to the accumulator, then chooses.
pub fn detect_or_answer<S: Scalar>(
    answers: &[RankedAnswer<S>],
    cfg: &QaDefenderConfig,
    acc: &mut Accumulator,
    guess_available: bool,
) -> Option<Choice> {
    acc.add(answers.first()?);
    choose(answers, cfg, acc, guess_available, |_| false)
}

pub struct QaDefender {
    corpus: Arc<Corpus>,
    cfg: QaDefenderConfig,
    acc: Accumulator,
    accumulated_turn: Option<u32>,
    /// lemma -> (times uttered, first use, surface)
    uttered: BTreeMap<String, (usize, usize, String)>,
}

impl QaDefender {
    pub fn new(corpus: Arc<Corpus>, cfg: QaDefenderConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(QaDefender {
            corpus,
            cfg,
            acc: Accumulator::default(),
            accumulated_turn: None,
            uttered: BTreeMap::new(),
        })
    }

    pub fn accumulator(&self) -> &Accumulator {
        &self.acc
    }
}

impl Agent for QaDefender {
    fn name(&self) -> String {
        match self.cfg.mode {
            DefenseMode::NoDefense => "qa-no-defense",
            DefenseMode::Detection => "qa-detection",
            DefenseMode::Prevention => "qa-prevention",
        }
        .to_string()
    }

    fn act(&mut self, view: &RoleView) -> Result<AgentAction> {
        let Some(question) = view.last_of(Role::Attacker).map(|u| u.text.clone()) else {
            return Ok(AgentAction::Utter(BACKOFF.to_string()));
        };
        let answers = extract_answers::<f64>(&question, &self.corpus, self.cfg.retrieve_k);
        if answers.is_empty() {
            return Ok(AgentAction::Utter(BACKOFF.to_string()));
        }
        if self.accumulated_turn != Some(view.turn) {
            self.acc.add(&answers[0]);
            self.accumulated_turn = Some(view.turn);
        }
        let rejected: HashSet<&str> = view.rejected.iter().map(String::as_str).collect();
        let skip = |a: &RankedAnswer<f64>| rejected.contains(answer_utterance(&question, &a.span).as_str());
        match choose(&answers, &self.cfg, &self.acc, view.guess_available, skip) {
            Some(Choice::Guess(i)) => Ok(AgentAction::Guess(answers[i].span.clone())),
            Some(Choice::Utter(i)) => {
                let a = &answers[i];
                let n = self.uttered.len();
                self.uttered.entry(a.lemma.clone()).or_insert((0, n, a.span.clone())).0 += 1;
                Ok(AgentAction::Utter(answer_utterance(&question, &a.span)))
            }
            None => Ok(AgentAction::Utter(BACKOFF.to_string())),
        }
    }

    fn forced_guess(&mut self, _view: &RoleView) -> Option<String> {
        match self.cfg.mode {
            DefenseMode::NoDefense => self
                .uttered
                .values()
                .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
                .map(|(_, _, s)| s.clone()),
            _ => self.acc.leader().map(str::to_string),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackMode {
    #[default]
    Direct,
    Indirect,
}

pub struct QaAttacker {
    corpus: Arc<Corpus>,
    graph: Arc<ConceptGraph>,
    judge: Arc<Judge>,
    mode: AttackMode,
    bias: f64,
    rng: ChaCha8Rng,
    used: HashSet<usize>,
    focus: Option<(u32, String)>,
}

impl QaAttacker {
    pub fn new(
        corpus: Arc<Corpus>,
        graph: Arc<ConceptGraph>,
        judge: Arc<Judge>,
        mode: AttackMode,
        bias: f64,
        seed: u64,
    ) -> Self {
        QaAttacker {
            corpus,
            graph,
            judge,
            mode,
            bias,
            rng: ChaCha8Rng::seed_from_u64(seed),
            used: HashSet::new(),
            focus: None,
        }
    }

    fn focus_for(&mut self, turn: u32, target: &str) -> String {
        if let Some((t, f)) = &self.focus {
            if *t == turn {
                return f.clone();
            }
        }
        let f = match self.mode {
            AttackMode::Direct => target.to_string(),
            AttackMode::Indirect => self.graph.walk_step(target, self.bias, &mut self.rng),
        };
        self.focus = Some((turn, f.clone()));
        f
    }
}

impl Agent for QaAttacker {
    fn name(&self) -> String {
        match self.mode {
            AttackMode::Direct => "qa-direct",
            AttackMode::Indirect => "qa-indirect",
        }
        .to_string()
    }

    fn prepare(&mut self, target: Option<&str>) -> Result<()> {
        let target = target.ok_or(Error::EmptyTarget)?;
        let mut focuses = vec![target.to_string()];
        focuses.extend(self.graph.one_hop(target));
        if focuses
            .iter()
            .any(|f| question_candidates(f, &self.corpus).iter().any(|(_, q)| !contains_target(q, target)))
        {
            Ok(())
        } else {
            Err(Error::NoSentence(target.to_string()))
        }
    }

    fn act(&mut self, view: &RoleView) -> Result<AgentAction> {
        let target = view.target.clone().ok_or(Error::EmptyTarget)?;
        let focus = self.focus_for(view.turn, &target);
        let mut focuses = vec![focus.clone()];
        let mut neighbors = self.graph.one_hop(&target);
        neighbors.shuffle(&mut self.rng);
        focuses.extend(neighbors);
        focuses.push(target.clone());

        let context = view.last_utterance().map(|u| u.text.clone());
        let rejected: HashSet<&str> = view.rejected.iter().map(String::as_str).collect();
        let mut fallback: Option<Vec<(usize, String)>> = None;
        let mut seen_focus = HashSet::new();
        for f in focuses {
            if !seen_focus.insert(f.clone()) {
                continue;
            }
            let cands: Vec<(usize, String)> = question_candidates(&f, &self.corpus)
                .into_iter()
                .filter(|(sid, q)| !self.used.contains(sid) && !contains_target(q, &target) && !rejected.contains(q.as_str()))
                .collect();
            if cands.is_empty() {
                continue;
            }
            let passing: Vec<(usize, String)> = cands
                .iter()
                .filter(|(_, q)| {
                    self.judge
                        .check_utterance(context.as_deref(), q, Role::Attacker, &target)
                        .is_ok_and(|v| v.accepted())
                })
                .cloned()
                .collect();
            if passing.is_empty() {
                fallback.get_or_insert(cands);
                continue;
            }
            let pick = if view.rejected.is_empty() {
                passing.choose(&mut self.rng).cloned()
            } else {
                self.most_relevant(&passing, context.as_deref())
            };
            if let Some((sid, q)) = pick {
                self.used.insert(sid);
                return Ok(AgentAction::Utter(q));
            }
        }
        match fallback.and_then(|c| self.most_relevant(&c, context.as_deref())) {
            Some((sid, q)) => {
                self.used.insert(sid);
                Ok(AgentAction::Utter(q))
            }
            None => Err(Error::NoSentence(focus)),
        }
    }
}

impl QaAttacker {
    fn most_relevant(&self, cands: &[(usize, String)], context: Option<&str>) -> Option<(usize, String)> {
        let idf = self.judge.idf();
        let mut best: Option<(f64, &(usize, String))> = None;
        for c in cands {
            let s = context.map_or(0.0, |ctx| cosine(idf, ctx, &c.1));
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, c));
            }
        }
        best.map(|(_, c)| c.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn corpus(lines: &[&str]) -> Corpus {
        Corpus::from_documents(
            lines
                .iter()
                .enumerate()
                .map(|(i, l)| Document::new(format!("doc{i:06}"), vec![l.to_string()]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn cloze_rules() {
        assert_eq!(
            cloze_question("The banana is a yellow fruit.", "banana").as_deref(),
            Some("What is a yellow fruit?")
        );
        assert_eq!(
            cloze_question("Monkeys love the ripe banana.", "banana").as_deref(),
            Some("Monkeys love what?")
        );
        assert_eq!(
            cloze_question("The farmer grows corn.", "farmer").as_deref(),
            Some("Who grows corn?")
        );
        assert_eq!(cloze_question("The apple is red.", "banana"), None);
        assert_eq!(cloze_question("The banana and the banana.", "banana"), None);
    }

    #[test]
    fn answer_sentence_replaces_wh_word() {
        assert_eq!(answer_utterance("What is a yellow fruit?", "banana"), "The banana is a yellow fruit.");
        assert_eq!(answer_utterance("Monkeys love what?", "banana"), "Monkeys love the banana.");
        assert_eq!(answer_utterance("Tell me more?", "banana"), "The answer is the banana.");
    }

    #[test]
    fn top_span_is_the_hidden_noun() {
        let c = corpus(&[
            "The banana is a yellow fruit.",
            "The monkey climbs a tall tree.",
            "The guitar has six strings.",
            "A river flows to the sea.",
            "The baker sells fresh bread.",
        ]);
        let answers = extract_answers::<f64>("What is a yellow fruit?", &c, 3);
        assert_eq!(answers[0].span, "banana");
        // s_end = idf(yellow) + idf(fruit), each ln(6/2) + 1
        let expect = 2.0 * ((6.0f64 / 2.0).ln() + 1.0);
        assert!((answers[0].s_start - 0.0).abs() < 1e-12);
        assert!((answers[0].s_end - expect).abs() < 1e-12);
        assert!(extract_answers::<f64>("What is zyzzyva?", &c, 3).is_empty());
    }

    #[test]
    fn confidence_is_exp_of_sum() {
        let src = SourceRef { paragraph: 0, sentence: 0 };
        assert_eq!(RankedAnswer::<f64>::new("x", 0.0, 0.0, src).confidence, 1.0);
        let a = RankedAnswer::<f64>::new("x", 1.0, 2.0, src);
        assert!((a.confidence - 20.085_536_923_187_668).abs() < 1e-9);
        let b = RankedAnswer::<f32>::new("x", 1.0, 2.0, src);
        assert!((b.confidence - 20.085_537).abs() < 1e-4);
    }

    fn ans(span: &str, conf: f64) -> RankedAnswer<f64> {
        RankedAnswer::new(span, conf.ln(), 0.0, SourceRef { paragraph: 0, sentence: 0 })
    }

    #[test]
    fn detection_and_prevention_rules() {
        let cfg = |mode| QaDefenderConfig {
            c1: 10.0,
            c2: 1.0,
            c3: 100.0,
            retrieve_k: 3,
            mode,
        };
        let mut acc = Accumulator::default();
        let a = [ans("banana", 20.0), ans("apple", 5.0)];
        assert_eq!(detect_or_answer(&a, &cfg(DefenseMode::Detection), &mut acc, true), Some(Choice::Guess(0)));
        assert_eq!(detect_or_answer(&a, &cfg(DefenseMode::Detection), &mut acc, false), Some(Choice::Utter(0)));

        let a = [ans("banana", 20.0), ans("banana peel", 8.0), ans("monkey", 3.0)];
        let mut acc = Accumulator::default();
        assert_eq!(detect_or_answer(&a, &cfg(DefenseMode::Prevention), &mut acc, true), Some(Choice::Utter(2)));
        assert!((acc.get("banana") - 20.0).abs() < 1e-9);

        let a = [ans("banana", 20.0), ans("monkey", 0.5)];
        let mut acc = Accumulator::default();
        acc.add(&ans("banana", 79.0));
        assert_eq!(detect_or_answer(&a, &cfg(DefenseMode::Prevention), &mut acc, true), Some(Choice::Utter(0)));
        assert_eq!(detect_or_answer(&a, &cfg(DefenseMode::Prevention), &mut acc, true), Some(Choice::Guess(0)));
        assert_eq!(acc.leader(), Some("banana"));
    }
}
