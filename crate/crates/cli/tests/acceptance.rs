//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use taboo_core::agents::qa::{RankedAnswer, SourceRef};
use taboo_core::agents::AgentAction;
use taboo_core::classifier::{gradient, objective, Example, LinearModel, TrainConfig};
use taboo_core::game::{GameConfig, GameState, OutcomeKind, Role};
use taboo_core::graph::{ConceptEdge, ConceptGraph, Relation, Walker, WalkConfig};
use taboo_core::judge::{contains_target, cosine, Referee, Verdict};
use taboo_core::tournament::{self, pearson, schedule, splitmix64, Resources, RunOutput, StatsReport, TournamentConfig};
use taboo_core::transcript::Transcript;
use taboo_service::{AppState, ServiceConfig};

type Outcome = Result<String, String>;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn load(name: &str) -> (TournamentConfig, Resources) {
    let cfg = TournamentConfig::load(&fixtures().join(name)).unwrap();
    let res = Resources::for_tournament(&cfg).unwrap();
    (cfg, res)
}

fn run(name: &str) -> (TournamentConfig, Resources, RunOutput) {
    let (cfg, res) = load(name);
    let out = tournament::run(&cfg, &res).unwrap();
    (cfg, res, out)
}

// Rules oracle

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Move {
    AttackerUtter,
    DefenderUtter,
    DefenderSaysTarget,
    GuessRight,
    GuessWrong,
    ForcedRight,
    ForcedWrong,
    ForcedNone,
}

const MOVES: [Move; 8] = [
    Move::AttackerUtter,
    Move::DefenderUtter,
    Move::DefenderSaysTarget,
    Move::GuessRight,
    Move::GuessWrong,
    Move::ForcedRight,
    Move::ForcedWrong,
    Move::ForcedNone,
];

/// The rules written out by hand, independent of the engine.
#[derive(Clone, Debug)]
struct Table {
    t: u32,
    utterances: u32,
    attacker_next: bool,
    guess_used: bool,
    awaiting: bool,
    result: Option<(OutcomeKind, u32, bool)>,
}

impl Table {
    fn new(t: u32) -> Self {
        Table {
            t,
            utterances: 0,
            attacker_next: true,
            guess_used: false,
            awaiting: false,
            result: None,
        }
    }

    /// `None` when the move is illegal in this state.
    fn apply(&self, m: Move) -> Option<Table> {
        if self.result.is_some() {
            return None;
        }
        let mut s = self.clone();
        let open = !self.awaiting;
        match m {
            Move::AttackerUtter if open && self.attacker_next => {
                s.utterances += 1;
                s.attacker_next = false;
            }
            Move::DefenderUtter if open && !self.attacker_next => {
                s.utterances += 1;
                s.attacker_next = true;
                if s.utterances == 2 * s.t {
                    if s.guess_used {
                        s.result = Some((OutcomeKind::Tie, s.t, false));
                    } else {
                        s.awaiting = true;
                    }
                }
            }
            Move::DefenderSaysTarget if open && !self.attacker_next => {
                s.utterances += 1;
                s.result = Some((OutcomeKind::AttackerWin, s.utterances / 2, false));
            }
            Move::GuessRight if open && !self.attacker_next && !self.guess_used => {
                s.result = Some((OutcomeKind::DefenderWin, (s.utterances + 1) / 2, false));
            }
            Move::GuessWrong if open && !self.attacker_next && !self.guess_used => {
                s.guess_used = true;
            }
            Move::ForcedRight if self.awaiting => s.result = Some((OutcomeKind::DefenderWin, s.t, true)),
            Move::ForcedWrong | Move::ForcedNone if self.awaiting => s.result = Some((OutcomeKind::Tie, s.t, false)),
            _ => return None,
        }
        Some(s)
    }
}

struct Stub;

impl Referee for Stub {
    fn check(&self, _c: Option<&str>, text: &str, role: Role, target: &str) -> taboo_core::Result<Verdict> {
        Ok(Verdict {
            fluency_score: 1.0,
            relevance_score: None,
            fluent: true,
            relevant: true,
            single_sentence: true,
            contains_target: (role == Role::Defender).then(|| text.split(' ').any(|w| w == target)),
            target_forbidden: false,
        })
    }
}

fn engine_apply(g: &mut GameState, m: Move) -> bool {
    let r = match m {
        Move::AttackerUtter => g.submit_utterance(&Stub, Role::Attacker, "tell me about fruit").map(drop),
        Move::DefenderUtter => g.submit_utterance(&Stub, Role::Defender, "i like fruit").map(drop),
        Move::DefenderSaysTarget => g.submit_utterance(&Stub, Role::Defender, "i like banana").map(drop),
        Move::GuessRight => g.submit_guess("banana").map(drop),
        Move::GuessWrong => g.submit_guess("cherry").map(drop),
        Move::ForcedRight => g.finalize_at_horizon(Some("banana")).map(drop),
        Move::ForcedWrong => g.finalize_at_horizon(Some("cherry")).map(drop),
        Move::ForcedNone => g.finalize_at_horizon(None).map(drop),
    };
    r.is_ok()
}

fn explore(g: &GameState, s: &Table, depth: u32, checked: &mut usize, finished: &mut usize) -> Result<(), String> {
    let got = g.outcome().map(|o| (o.kind, o.turn, o.forced));
    if got != s.result {
        return Err(format!("outcome {got:?}, table says {:?}", s.result));
    }
    if s.result.is_some() {
        *finished += 1;
    }
    for m in MOVES {
        let mut next = g.clone();
        let ok = engine_apply(&mut next, m);
        let want = s.apply(m);
        *checked += 1;
        if ok != want.is_some() {
            return Err(format!("{m:?} legal={ok} on engine, {} in table", want.is_some()));
        }
        if let Some(w) = want {
            if depth > 0 {
                explore(&next, &w, depth - 1, checked, finished)?;
            }
        }
    }
    Ok(())
}

fn rules_oracle() -> Outcome {
    let start = Instant::now();
    let (mut checked, mut finished) = (0, 0);
    for t in 1..=3 {
        let cfg = GameConfig {
            max_turns: t,
            ..GameConfig::default()
        };
        let g = GameState::new(cfg, "banana").unwrap();
        // six turns of two utterances plus a guess and a forced guess
        explore(&g, &Table::new(t), 14, &mut checked, &mut finished)?;
    }
    let el = start.elapsed();
    ensure!(el < Duration::from_secs(1), "took {el:?}");
    Ok(format!("{checked} transitions, {finished} terminal sequences agree, {el:?}"))
}

// Confidence

fn confidence_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let src = SourceRef { paragraph: 0, sentence: 0 };
    let mut answers = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let (a, b) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let r = RankedAnswer::<f64>::new(format!("w{i}"), a, b, src);
        worst = worst.max((r.confidence.ln() - (a + b)).abs());
        answers.push(r);
    }
    ensure!(worst <= 1e-9, "max |log conf - sum| = {worst:e}");
    let mut by_conf: Vec<usize> = (0..answers.len()).collect();
    let mut by_sum = by_conf.clone();
    by_conf.sort_by(|&i, &j| answers[j].confidence.total_cmp(&answers[i].confidence).then(i.cmp(&j)));
    by_sum.sort_by(|&i, &j| {
        let (x, y) = (answers[i].s_start + answers[i].s_end, answers[j].s_start + answers[j].s_end);
        y.total_cmp(&x).then(i.cmp(&j))
    });
    ensure!(by_conf == by_sum, "rankings differ");
    Ok(format!("max error {worst:.1e} over 10^4 pairs, rankings equal"))
}

// Walk

fn walk_distribution() -> Outcome {
    let start = Instant::now();
    let leaves = ["apple", "orange", "grape", "melon", "lemon"];
    let edges = leaves.iter().map(|l| ConceptEdge {
        head: "fruit".into(),
        relation: Relation::RelatedTo,
        tail: l.to_string(),
        weight: 1.0,
    });
    let g = ConceptGraph::from_edges(edges);
    let mut w = Walker::new(WalkConfig { bias: 0.6, rng_seed: 9 }).unwrap();
    let n = 100_000;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for _ in 0..n {
        *counts.entry(w.step(&g, "fruit")).or_insert(0) += 1;
    }
    let freq = |k: &str| counts.get(k).copied().unwrap_or(0) as f64 / n as f64;
    let target = freq("fruit");
    ensure!((target - 0.6).abs() <= 0.01, "target frequency {target}");
    let uniform = 0.4 / leaves.len() as f64;
    for l in leaves {
        ensure!((freq(l) - uniform).abs() <= 0.01, "{l} frequency {}", freq(l));
    }
    ensure!(counts.len() == leaves.len() + 1, "walk left the star");
    let el = start.elapsed();
    ensure!(el < Duration::from_secs(5), "took {el:?}");
    Ok(format!("target {target:.4}, neighbors within 0.01 of {uniform:.2}, {el:?}"))
}

// Stage alternation

fn rates(r: &StatsReport) -> String {
    format!("A{:.0}/D{:.0}/T{:.0}", r.attacker_rate, r.defender_rate, r.tie_rate)
}

fn manual_stage1_games(cfg: &TournamentConfig, res: &Resources, out: &RunOutput) -> Result<(), String> {
    let words = cfg.word_list().unwrap();
    for spec in schedule(cfg.seed, &words, cfg.rounds).into_iter().take(3) {
        let mut attacker = res
            .build_agent(&cfg.attacker, Role::Attacker, Some(&cfg.defender), splitmix64(spec.seed ^ 1))
            .unwrap();
        let mut defender = res
            .build_agent(&cfg.defender, Role::Defender, Some(&cfg.attacker), splitmix64(spec.seed ^ 2))
            .unwrap();
        attacker.prepare(Some(&spec.word)).unwrap();
        defender.prepare(None).unwrap();
        let mut g = GameState::new(cfg.game_config(res.judge_config()), &spec.word).unwrap();
        let q = match attacker.act(&g.view(Role::Attacker)).unwrap() {
            AgentAction::Utter(q) => q,
            other => return Err(format!("attacker opened with {other:?}")),
        };
        ensure!(!contains_target(&q, &spec.word), "question names {}", spec.word);
        g.submit_utterance(&*res.judge, Role::Attacker, &q).unwrap();
        let a = match defender.act(&g.view(Role::Defender)).unwrap() {
            AgentAction::Utter(a) => a,
            other => return Err(format!("defender replied with {other:?}")),
        };
        ensure!(contains_target(&a, &spec.word), "answer {a:?} misses {}", spec.word);
        let report = g.submit_utterance(&*res.judge, Role::Defender, &a).unwrap();
        let o = report.outcome.ok_or("game did not end")?;
        ensure!(o.kind == OutcomeKind::AttackerWin && o.turn == 1, "outcome {o:?}");
        let (_, recorded) = out
            .games
            .iter()
            .find(|(s, _)| *s == spec)
            .ok_or_else(|| format!("{} missing from run", spec.file_name()))?;
        ensure!(recorded.actions == g.actions(), "{} differs from the runner", spec.file_name());
    }
    Ok(())
}

fn stage_alternation(reports: &mut Vec<StatsReport>) -> Outcome {
    let start = Instant::now();
    let mut r = Vec::new();
    for (i, name) in ["stage1.toml", "stage2.toml", "stage3.toml", "stage4.toml"].iter().enumerate() {
        let (cfg, res, out) = run(name);
        ensure!(out.report.games == 100, "{name}: {} games", out.report.games);
        if i == 0 {
            manual_stage1_games(&cfg, &res, &out)?;
        }
        r.push(out.report);
    }
    let el = start.elapsed();
    let summary = r.iter().map(rates).collect::<Vec<_>>().join(" ");
    ensure!(r[0].attacker_rate >= 90.0, "stage 1 attacker {}: {summary}", r[0].attacker_rate);
    ensure!(r[0].defender_rate == 0.0, "stage 1 defender {}: {summary}", r[0].defender_rate);
    ensure!(r[1].defender_rate > r[0].defender_rate, "stage 2 defender: {summary}");
    ensure!(r[2].attacker_rate > r[1].attacker_rate, "stage 3 attacker: {summary}");
    ensure!(r[3].tie_rate > r[2].tie_rate, "stage 4 tie: {summary}");
    ensure!(el < Duration::from_secs(120), "took {el:?}");
    reports.extend(r);
    Ok(format!("{summary}, 3 stage-1 games stepped by hand, {el:?}"))
}

// Chat ordering

fn chat_ordering(reports: &mut Vec<StatsReport>) -> Outcome {
    let start = Instant::now();
    let names = [
        "chat_topic_leading.toml",
        "chat_golden_trigger.toml",
        "chat_golden_vs_scripted.toml",
        "chat_api_vs_scripted.toml",
    ];
    let r: Vec<StatsReport> = names.iter().map(|n| run(n).2.report).collect();
    let el = start.elapsed();
    let summary = r.iter().map(rates).collect::<Vec<_>>().join(" ");
    ensure!(r[1].attacker_rate > r[0].attacker_rate, "golden trigger vs topic leading: {summary}");
    ensure!(r[3].attacker_rate > r[2].attacker_rate, "api vs golden trigger on scripted: {summary}");
    ensure!(el < Duration::from_secs(120), "took {el:?}");
    reports.extend(r);
    Ok(format!("TL, GT, GT-scripted, API-scripted = {summary}, {el:?}"))
}

// Judge

fn judge_properties() -> Outcome {
    let (_, res) = load("stage1.toml");
    let corpus = res.corpus.clone().unwrap();
    let idf = res.judge.idf();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sentences: Vec<&str> = corpus.sentences().iter().map(|s| s.text.as_str()).collect();
    let sample: Vec<&str> = sentences.choose_multiple(&mut rng, 200).copied().collect();
    for s in &sample {
        let c = cosine(idf, s, s);
        ensure!((c - 1.0).abs() < 1e-12, "relevance({s:?}, itself) = {c}");
    }
    let mut higher = 0;
    for s in &sample {
        let mut toks: Vec<&str> = s.trim_end_matches('.').split_whitespace().collect();
        toks.shuffle(&mut rng);
        let shuffled = toks.join(" ");
        if res.judge.perplexity(&shuffled).unwrap() > res.judge.perplexity(s).unwrap() {
            higher += 1;
        }
    }
    ensure!(higher * 100 >= 95 * sample.len(), "shuffled higher on {higher}/200");
    for (i, s) in sample.iter().take(50).enumerate() {
        let ctx = sample[(i + 1) % sample.len()];
        let a = res.judge.check_utterance(Some(ctx), s, Role::Defender, "banana").unwrap();
        let b = res.judge.check_utterance(Some(ctx), s, Role::Defender, "banana").unwrap();
        ensure!(a == b, "verdicts differ for {s:?}");
        ensure!(res.judge.perplexity(s).unwrap() == res.judge.perplexity(s).unwrap(), "perplexity differs");
    }
    Ok(format!("cosine self-relevance 1 on 200 sentences, shuffled higher on {higher}/200, repeated verdicts equal"))
}

// Classifier

fn classifier() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let width = 6u32;
    let dim = 1usize << width;
    let examples: Vec<Example<f64>> = (0..40)
        .map(|_| {
            let mut slots: Vec<u32> = (0..dim as u32).collect();
            slots.shuffle(&mut rng);
            let mut f: Vec<(u32, f64)> = slots[..5].iter().map(|&s| (s, rng.gen_range(-1.0..1.0))).collect();
            f.sort_by_key(|p| p.0);
            Example {
                features: f,
                label: rng.gen_bool(0.5),
            }
        })
        .collect();
    let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let b = rng.gen_range(-0.5..0.5);
    let l2 = 1e-2;
    let (gw, gb) = gradient(&w, b, &examples, l2);
    let h = 1e-5;
    let (mut diff, mut norm) = (0.0f64, 0.0f64);
    for i in 0..=dim {
        let numeric = if i < dim {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[i] += h;
            down[i] -= h;
            (objective(&up, b, &examples, l2) - objective(&down, b, &examples, l2)) / (2.0 * h)
        } else {
            (objective(&w, b + h, &examples, l2) - objective(&w, b - h, &examples, l2)) / (2.0 * h)
        };
        let analytic = if i < dim { gw[i] } else { gb };
        diff += (analytic - numeric).powi(2);
        norm += (analytic.abs() + numeric.abs()).powi(2);
    }
    let rel = diff.sqrt() / norm.sqrt();
    ensure!(rel <= 1e-5, "gradient relative error {rel:e}");

    let pos = ["sunny", "bright", "warm", "cheerful", "golden", "sparkling"];
    let neg = ["stormy", "gloomy", "cold", "dreary", "grey", "bleak"];
    let text = |rng: &mut ChaCha8Rng, words: &[&str]| {
        (0..4).map(|_| *words.choose(rng).unwrap()).collect::<Vec<_>>().join(" ") + " day"
    };
    let mk = |rng: &mut ChaCha8Rng, n: usize| -> Vec<(String, bool)> {
        (0..n)
            .map(|i| if i % 2 == 0 { (text(rng, &pos), true) } else { (text(rng, &neg), false) })
            .collect()
    };
    let train = mk(&mut rng, 200);
    let test = mk(&mut rng, 200);
    let cfg = TrainConfig {
        width_bits: 12,
        ..TrainConfig::default()
    };
    let (model, _) = LinearModel::<f64>::train(&train, &cfg).map_err(|e| e.to_string())?;
    let mut correct = 0;
    for (t, y) in &test {
        let p = model.predict(t);
        ensure!(p > 0.0 && p < 1.0, "prediction {p} for {t:?}");
        correct += usize::from((p >= 0.5) == *y);
    }
    let acc = correct as f64 / test.len() as f64;
    ensure!(acc >= 0.95, "accuracy {acc}");
    for extreme in ["", "sunny sunny sunny sunny sunny sunny sunny sunny", "zzz"] {
        let p = model.predict(extreme);
        ensure!(p > 0.0 && p < 1.0, "prediction {p} for {extreme:?}");
    }
    Ok(format!("gradient relative error {rel:.1e}, held-out accuracy {acc:.3}, predictions in (0,1)"))
}

// Statistics

fn pearson_by_sums(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (sx, sy) = (xs.iter().sum::<f64>(), ys.iter().sum::<f64>());
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

fn statistics(reports: &[StatsReport]) -> Outcome {
    ensure!(!reports.is_empty(), "no reports to check");
    for r in reports {
        let total = r.attacker_rate + r.defender_rate + r.tie_rate + r.aborted_rate;
        ensure!((total - 100.0).abs() <= 0.01, "rates sum to {total}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let xs: Vec<f64> = (0..50).map(|_| rng.gen_range(1.0..5.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.3 * x + rng.gen_range(-1.0..1.0)).collect();
        let got = pearson(&xs, &ys).unwrap();
        worst = worst.max((got - pearson_by_sums(&xs, &ys)).abs());
    }
    ensure!(worst <= 1e-9, "pearson differs by {worst:e}");
    let xs: Vec<f64> = (0..20).map(|i| 1.0 + 0.2 * i as f64).collect();
    let up: Vec<f64> = xs.iter().map(|x| 0.25 * x - 0.1).collect();
    let down: Vec<f64> = xs.iter().map(|x| 1.5 - 0.25 * x).collect();
    let (ru, rd) = (pearson(&xs, &up).unwrap(), pearson(&xs, &down).unwrap());
    ensure!((ru - 1.0).abs() < 1e-12 && (rd + 1.0).abs() < 1e-12, "planted r = {ru}, {rd}");
    let with_conc = reports.iter().filter(|r| r.concreteness.is_some()).count();
    Ok(format!(
        "{} reports sum to 100, pearson within {worst:.1e} of the sum formula, planted r = +1/-1, {with_conc} concreteness analyses",
        reports.len()
    ))
}

// Determinism and replay

fn determinism() -> Outcome {
    let (mut cfg, res) = load("chat_topic_leading.toml");
    cfg.jobs = 1;
    let a = tournament::run(&cfg, &res).unwrap();
    cfg.jobs = 4;
    let b = tournament::run(&cfg, &res).unwrap();
    let (_, res2) = load("chat_topic_leading.toml");
    let c = tournament::run(&cfg, &res2).unwrap();
    let bytes = |o: &RunOutput| o.transcripts().map(Transcript::to_jsonl).collect::<Vec<_>>();
    ensure!(bytes(&a) == bytes(&b), "jobs=1 and jobs=4 differ");
    ensure!(bytes(&a) == bytes(&c), "fresh resources differ");

    let dir = tempfile::tempdir().unwrap();
    a.write(dir.path()).unwrap();
    let (_, res3) = load("stage3.toml");
    let (cfg3, _) = load("stage3.toml");
    let d = tournament::run(&cfg3, &res3).unwrap();
    d.write(&dir.path().join("stage3")).unwrap();
    let n = a.games.len() + d.games.len();
    let o = Command::new(env!("CARGO_BIN_EXE_taboo"))
        .arg("replay")
        .arg(dir.path().join("transcripts"))
        .arg(dir.path().join("stage3/transcripts"))
        .output()
        .unwrap();
    let verified = String::from_utf8_lossy(&o.stdout).matches("outcome verified").count();
    ensure!(o.status.success() && verified == n, "replay verified {verified}/{n}");
    Ok(format!("{} transcripts byte-identical across runs, replay verified {verified}/{n}", a.games.len()))
}

// Service

struct Http {
    base: String,
    agent: ureq::Agent,
    n: u64,
}

impl Http {
    fn start() -> Http {
        let cfg = ServiceConfig::load(&fixtures().join("service.toml")).unwrap();
        let state = Arc::new(AppState::from_config(&cfg).unwrap());
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
            rt.block_on(async move {
                let l = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                tx.send(l.local_addr().unwrap()).unwrap();
                taboo_service::serve(l, state).await.unwrap();
            });
        });
        Http {
            base: format!("http://{}", rx.recv().unwrap()),
            agent: ureq::Agent::config_builder().http_status_as_error(false).build().into(),
            n: 0,
        }
    }

    fn post(&self, path: &str, body: &Value) -> (u16, String) {
        let mut r = self.agent.post(format!("{}{path}", self.base)).send_json(body).unwrap();
        (r.status().as_u16(), r.body_mut().read_to_string().unwrap())
    }

    fn get(&self, path: &str) -> (u16, String) {
        let mut r = self.agent.get(format!("{}{path}", self.base)).call().unwrap();
        (r.status().as_u16(), r.body_mut().read_to_string().unwrap())
    }

    fn act(&mut self, id: &str, token: &str, action: Value) -> (u16, Value) {
        self.n += 1;
        let body = json!({ "token": token, "idempotency_key": format!("k{}", self.n), "action": action });
        let (s, t) = self.post(&format!("/games/{id}/act"), &body);
        (s, serde_json::from_str(&t).unwrap())
    }

    fn create(&self, body: Value) -> Value {
        let (s, t) = self.post("/games", &body);
        assert_eq!(s, 201, "{t}");
        serde_json::from_str(&t).unwrap()
    }
}

fn leaks(body: &str, target: &str) -> bool {
    let pat = regex::Regex::new(&format!(r"(?i)\b{target}(s|es)?\b")).unwrap();
    pat.is_match(body)
}

fn service_full_game(h: &mut Http) -> Result<usize, String> {
    let g = h.create(json!({ "attacker": "human", "defender": "human", "target": "coffee" }));
    let id = g["id"].as_str().unwrap();
    let (a, d) = (g["tokens"]["attacker"].as_str().unwrap(), g["tokens"]["defender"].as_str().unwrap());
    let mut scanned = 0;
    let mut scan = |h: &Http| -> Result<(), String> {
        let (_, body) = h.get(&format!("/games/{id}?token={d}"));
        scanned += 1;
        ensure!(!leaks(&body, "coffee"), "defender view leaks: {body}");
        Ok(())
    };
    scan(h)?;
    let script = [
        (a, json!({ "type": "utterance", "text": "what was the last mug you enjoyed near the breakfast" })),
        (d, json!({ "type": "utterance", "text": "that is a fair point about the breakfast" })),
        (a, json!({ "type": "utterance", "text": "what is your honest opinion on espresso and the breakfast" })),
    ];
    for (tok, action) in script {
        let (s, r) = h.act(id, tok, action);
        ensure!(s == 200, "act returned {s}: {r}");
        if tok == d {
            ensure!(!leaks(&r.to_string(), "coffee"), "defender act response leaks");
        }
        scan(h)?;
    }
    let (s, r) = h.act(id, d, json!({ "type": "guess", "word": "coffee" }));
    ensure!(s == 200, "guess returned {s}");
    ensure!(r["view"]["outcome"]["kind"] == "defender_win", "outcome {}", r["view"]["outcome"]);
    ensure!(r["view"]["target"] == "coffee", "target not revealed");
    let (s, _) = h.act(id, a, json!({ "type": "utterance", "text": "is espresso better with the mug or without it" }));
    ensure!(s == 409, "act after finish returned {s}");
    Ok(scanned)
}

fn golden_views(h: &mut Http) -> Result<usize, String> {
    let mut scanned = 0;
    for (seed, word) in [(1u64, "pizza"), (2, "camera")] {
        let g = h.create(json!({ "attacker": "chat-golden-trigger", "defender": "human", "target": word, "seed": seed }));
        let id = g["id"].as_str().unwrap().to_string();
        let d = g["tokens"]["defender"].as_str().unwrap().to_string();
        for _ in 0..12 {
            let (_, body) = h.get(&format!("/games/{id}?token={d}"));
            let v: Value = serde_json::from_str(&body).unwrap();
            if v["view"]["finished"] == true {
                break;
            }
            scanned += 1;
            ensure!(!leaks(&body, word), "defender view leaks {word}");
            let action = if v["view"]["awaiting_forced_guess"] == true {
                json!({ "type": "pass" })
            } else {
                let post = v["view"]["history"].as_array().unwrap().last().unwrap()["text"].clone();
                let (_, reply) = h.post("/defender/respond", &json!({ "api_key": format!("acc{seed}"), "post": post }));
                let reply: Value = serde_json::from_str(&reply).unwrap();
                json!({ "type": "utterance", "text": reply["response"] })
            };
            let (_, r) = h.act(&id, &d, action);
            if r["view"]["finished"] != true {
                ensure!(!leaks(&r.to_string(), word), "act response leaks {word}");
            }
        }
    }
    Ok(scanned)
}

fn two_games(h: &mut Http, interleave: bool) -> Vec<Value> {
    let pairs = taboo_core::corpus::pairs::load_pairs(&fixtures().join("pairs.jsonl")).unwrap();
    let games: Vec<(String, String, Vec<String>)> = [("coffee", 31u64), ("beach", 32u64)]
        .iter()
        .map(|(w, seed)| {
            let g = h.create(json!({
                "attacker": "human", "defender": "chat-retrieval", "target": w, "seed": seed, "max_turns": 6,
            }));
            let posts = pairs
                .iter()
                .filter(|p| !p.post.starts_with("so ") && p.golden_response.contains(w))
                .map(|p| p.post.clone())
                .collect();
            (g["id"].as_str().unwrap().to_string(), g["tokens"]["attacker"].as_str().unwrap().to_string(), posts)
        })
        .collect();
    let mut done = vec![false; games.len()];
    let mut step = vec![0usize; games.len()];
    let mut pending: Vec<usize> = (0..games.len()).collect();
    while !pending.is_empty() {
        // serial play finishes the first pending game before touching the next
        let batch: Vec<usize> = if interleave { pending.clone() } else { vec![pending[0]] };
        for k in batch {
            let (id, tok, posts) = &games[k];
            let text = &posts[step[k] % posts.len()];
            step[k] += 1;
            let (_, r) = h.act(id, tok, json!({ "type": "utterance", "text": text }));
            done[k] = r["view"]["finished"] == true;
        }
        pending.retain(|k| !done[*k]);
    }
    games
        .iter()
        .map(|(id, tok, _)| {
            let (_, body) = h.get(&format!("/games/{id}?token={tok}"));
            let mut v: Value = serde_json::from_str(&body).unwrap();
            v["view"].take()
        })
        .collect()
}

fn service_contract() -> Outcome {
    let mut h = Http::start();
    let full = service_full_game(&mut h)?;
    let golden = golden_views(&mut h)?;
    let serial = two_games(&mut Http::start(), false);
    let interleaved = two_games(&mut Http::start(), true);
    ensure!(serial == interleaved, "interleaved outcomes differ from serial");
    let outcomes: Vec<String> = serial.iter().map(|v| v["outcome"]["kind"].to_string()).collect();
    let manifest = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("Cargo.toml")).unwrap();
    ensure!(!manifest.contains("web"), "cli depends on a web client crate");
    Ok(format!(
        "full game won by the defender guess, {} defender views clean, interleaved = serial ({}), no web client built",
        full + golden,
        outcomes.join(", ")
    ))
}

fn main() {
    let mut reports = Vec::new();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut check = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match &r {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(e) => println!("FAIL {name}: {e}"),
        }
        results.push((name, r));
    };
    check("rules oracle", &mut rules_oracle);
    check("confidence formula", &mut confidence_formula);
    check("walk distribution", &mut walk_distribution);
    check("stage alternation", &mut || stage_alternation(&mut reports));
    check("chat strategy ordering", &mut || chat_ordering(&mut reports));
    check("judge properties", &mut judge_properties);
    check("classifier", &mut classifier);
    check("statistics", &mut || statistics(&reports));
    check("determinism and replay", &mut determinism);
    check("service contract", &mut service_contract);
    let failed = results.iter().filter(|(_, r)| r.is_err()).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
