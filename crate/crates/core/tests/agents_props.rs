use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use taboo_core::agents::chat::{api_collect_and_train, golden_trigger_select, DefenderApi, PairStore};
use taboo_core::agents::qa::{choose, Accumulator, Choice, DefenseMode, QaDefenderConfig, RankedAnswer, SourceRef};
use taboo_core::agents::AgentAction;
use taboo_core::classifier::TrainConfig;
use taboo_core::corpus::pairs::load_pairs;
use taboo_core::game::{GameConfig, GameState, Role};
use taboo_core::judge::contains_target;
use taboo_core::tournament::{read_word_list, AgentKind, AgentSpec, Resources, TournamentConfig};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn qa() -> &'static (Resources, Vec<String>) {
    static R: OnceLock<(Resources, Vec<String>)> = OnceLock::new();
    R.get_or_init(|| {
        let cfg = TournamentConfig::load(&fixtures().join("stage3.toml")).unwrap();
        (Resources::for_tournament(&cfg).unwrap(), cfg.word_list().unwrap())
    })
}

fn chat() -> &'static (Arc<PairStore>, Vec<String>) {
    static R: OnceLock<(Arc<PairStore>, Vec<String>)> = OnceLock::new();
    R.get_or_init(|| {
        let store = PairStore::new(load_pairs(&fixtures().join("pairs.jsonl")).unwrap()).unwrap();
        (Arc::new(store), read_word_list(&[], Some(&fixtures().join("words_chat.txt"))).unwrap())
    })
}

const SPANS: [&str; 6] = ["yellow fruit", "the banana", "six strings", "a tiger", "night hunter", "fruit bowl"];

fn answers() -> impl Strategy<Value = Vec<RankedAnswer<f64>>> {
    prop::collection::vec((0..SPANS.len(), -5.0f64..5.0, -5.0f64..5.0), 1..6).prop_map(|v| {
        let mut out: Vec<RankedAnswer<f64>> = v
            .into_iter()
            .enumerate()
            .map(|(i, (s, a, b))| RankedAnswer::new(SPANS[s], a, b, SourceRef { paragraph: i, sentence: 0 }))
            .collect();
        out.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
        out
    })
}

fn lemma_set(a: &RankedAnswer<f64>) -> BTreeSet<&str> {
    a.lemma.split(' ').collect()
}

struct Counting {
    calls: usize,
}

impl DefenderApi for Counting {
    fn respond(&mut self, post: &str) -> taboo_core::Result<String> {
        self.calls += 1;
        Ok(if self.calls % 2 == 0 { format!("i like coffee and {post}") } else { "no idea".into() })
    }

    fn calls(&self) -> usize {
        self.calls
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn confidence_is_monotone_in_logits(a in -20.0f64..20.0, b in -20.0f64..20.0, d in 0.0f64..5.0) {
        let src = SourceRef { paragraph: 0, sentence: 0 };
        let lo = RankedAnswer::new("x", a, b, src);
        let hi = RankedAnswer::new("x", a + d, b, src);
        prop_assert!(hi.confidence >= lo.confidence);
        prop_assert!((lo.confidence - (a + b).exp()).abs() <= 1e-12 * lo.confidence.max(1.0));
    }

    #[test]
    fn prevention_prefers_disjoint_alternatives(ans in answers(), c2 in 0.0f64..5.0) {
        let cfg = QaDefenderConfig { c1: 1e9, c2, c3: 1e9, retrieve_k: 3, mode: DefenseMode::Prevention };
        let top = lemma_set(&ans[0]);
        let eligible = ans[1..].iter().any(|a| lemma_set(a).is_disjoint(&top) && a.confidence > c2);
        match choose(&ans, &cfg, &Accumulator::default(), true, |_| false) {
            Some(Choice::Utter(i)) => {
                if eligible {
                    prop_assert!(i > 0 && lemma_set(&ans[i]).is_disjoint(&top) && ans[i].confidence > c2);
                } else {
                    prop_assert_eq!(i, 0);
                }
            }
            other => prop_assert!(false, "unexpected {:?}", other),
        }
    }

    #[test]
    fn accumulator_never_decreases(rounds in prop::collection::vec(answers(), 1..8)) {
        let mut acc = Accumulator::default();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for ans in &rounds {
            let before: Vec<f64> = seen.iter().map(|l| acc.get(l)).collect();
            acc.add(&ans[0]);
            for (l, b) in seen.iter().zip(before) {
                prop_assert!(acc.get(l) >= b);
            }
            seen.insert(ans[0].lemma.clone());
            prop_assert!(acc.leader().is_some());
        }
    }

    #[test]
    fn qa_attacker_questions_avoid_the_target(seed in any::<u64>(), indirect in any::<bool>(), pick in any::<prop::sample::Index>()) {
        let (res, words) = qa();
        let target = pick.get(words);
        let kind = if indirect { AgentKind::QaIndirect } else { AgentKind::QaDirect };
        let mut agent = res.build_agent(&AgentSpec::new(kind), Role::Attacker, None, seed).unwrap();
        if agent.prepare(Some(target)).is_err() {
            return Ok(());
        }
        let state = GameState::new(GameConfig::default(), target).unwrap();
        if let Ok(AgentAction::Utter(q)) = agent.act(&state.view(Role::Attacker)) {
            prop_assert!(!contains_target(&q, target), "{:?} names {}", q, target);
        }
    }

    #[test]
    fn golden_trigger_never_reuses_and_triggers(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let (store, words) = chat();
        let target = pick.get(words);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut used = HashSet::new();
        let mut last: Option<String> = None;
        let qualifying: HashSet<usize> = store.qualifying(target).into_iter().collect();
        for _ in 0..qualifying.len() + 3 {
            let Ok(id) = golden_trigger_select(target, store, last.as_deref(), &used, &mut rng) else { break };
            prop_assert!(used.insert(id), "post {} reused", id);
            if used.len() <= qualifying.len() {
                prop_assert!(qualifying.contains(&id));
                prop_assert!(contains_target(&store.pair(id).golden_response, target));
            }
            last = Some(store.pair(id).golden_response.clone());
        }
    }

    #[test]
    fn api_training_respects_the_budget(budget in 1usize..12, n in 1usize..20) {
        let posts: Vec<String> = (0..n).map(|i| format!("post number {i} about breakfast")).collect();
        let mut api = Counting { calls: 0 };
        let cfg = TrainConfig { epochs: 5, ..TrainConfig::default() };
        let model = api_collect_and_train("coffee", &posts, &mut api, budget, &cfg).unwrap();
        prop_assert!(api.calls() <= budget);
        prop_assert_eq!(model.queries, api.calls());
        prop_assert_eq!(model.queries, n.min(budget));
    }
}
