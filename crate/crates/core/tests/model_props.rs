use std::collections::BTreeSet;

use proptest::prelude::*;
use taboo_core::classifier::{gradient, objective, Example, LinearModel};
use taboo_core::game::{GameConfig, GameState, Role};
use taboo_core::judge::{contains_target, Referee, Verdict};
use taboo_core::tournament::stats::aggregate;
use taboo_core::tournament::{schedule, AgentKind};
use taboo_core::transcript::{StartRecord, Transcript};

struct Lenient;

impl Referee for Lenient {
    fn check(&self, _c: Option<&str>, text: &str, role: Role, target: &str) -> taboo_core::Result<Verdict> {
        Ok(Verdict {
            fluency_score: 1.0,
            relevance_score: None,
            fluent: true,
            relevant: true,
            single_sentence: true,
            contains_target: (role == Role::Defender).then(|| contains_target(text, target)),
            target_forbidden: false,
        })
    }
}

/// One finished game per code: 0 attacker win, 1 defender win, 2 tie, 3 abort.
fn game(word: &str, code: u8, index: usize) -> Transcript {
    let cfg = GameConfig { max_turns: 1, ..GameConfig::default() };
    let mut g = GameState::new(cfg, word).unwrap();
    g.submit_utterance(&Lenient, Role::Attacker, "what is it").unwrap();
    match code {
        0 => drop(g.submit_utterance(&Lenient, Role::Defender, &format!("a {word}")).unwrap()),
        1 => drop(g.submit_guess(word).unwrap()),
        2 => {
            g.submit_utterance(&Lenient, Role::Defender, "no clue").unwrap();
            g.finalize_at_horizon(None).unwrap();
        }
        _ => drop(g.abort(Role::Defender, "stuck").unwrap()),
    }
    let start = StartRecord {
        target: word.into(),
        max_turns: 1,
        seed: index as u64,
        abort_policy: g.config().abort_policy,
        judge: g.config().judge.clone(),
        attacker: AgentKind::Scripted.as_str().into(),
        defender: AgentKind::Scripted.as_str().into(),
        word_index: index,
        round: 0,
    };
    Transcript::from_game(start, &g).unwrap()
}

fn examples() -> impl Strategy<Value = Vec<Example<f64>>> {
    prop::collection::vec((prop::collection::btree_map(0u32..16, -2.0f64..2.0, 1..5), any::<bool>()), 1..12).prop_map(|v| {
        v.into_iter()
            .map(|(f, label)| Example { features: f.into_iter().collect(), label })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_central_differences(ex in examples(), w in prop::collection::vec(-1.0f64..1.0, 16), b in -1.0f64..1.0, l2 in 0.0f64..0.1) {
        let (gw, gb) = gradient(&w, b, &ex, l2);
        let h = 1e-6;
        for i in 0..w.len() {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[i] += h;
            down[i] -= h;
            let num = (objective(&up, b, &ex, l2) - objective(&down, b, &ex, l2)) / (2.0 * h);
            prop_assert!((num - gw[i]).abs() <= 1e-6 * (1.0 + num.abs()), "w{}: {} vs {}", i, num, gw[i]);
        }
        let num = (objective(&w, b + h, &ex, l2) - objective(&w, b - h, &ex, l2)) / (2.0 * h);
        prop_assert!((num - gb).abs() <= 1e-6 * (1.0 + num.abs()));
    }

    #[test]
    fn predictions_are_monotone_probabilities(weights in prop::collection::vec((0u32..64, -30.0f64..30.0), 0..10), bias in -30.0f64..30.0, xs in prop::collection::vec(prop::collection::vec((0u32..64, -3.0f64..3.0), 0..6), 2..10)) {
        let m = LinearModel::from_parts(6, weights, bias);
        let mut scored: Vec<(f64, f64)> = xs.iter().map(|x| (m.score(x), m.predict_features(x))).collect();
        for &(s, p) in &scored {
            prop_assert!((0.0..=1.0).contains(&p));
            if s.abs() < 30.0 {
                prop_assert!(p > 0.0 && p < 1.0, "score {} gave {}", s, p);
            }
        }
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in scored.windows(2) {
            prop_assert!(w[0].1 <= w[1].1);
        }
    }

    #[test]
    fn aggregate_rates_sum_and_ignore_order(codes in prop::collection::vec((0usize..4, 0u8..4), 1..30), rot in any::<prop::sample::Index>()) {
        let words = ["apple", "kite", "lamp", "rose"];
        let ts: Vec<Transcript> = codes.iter().enumerate().map(|(i, &(w, c))| game(words[w], c, i)).collect();
        let r = aggregate(&ts, &[]).unwrap();
        let total = r.attacker_rate + r.defender_rate + r.tie_rate + r.aborted_rate;
        prop_assert!((total - 100.0).abs() < 1e-9, "{}", total);
        prop_assert_eq!(r.games, ts.len());
        let attacker = codes.iter().filter(|c| c.1 == 0).count() as f64;
        prop_assert!((r.attacker_rate - 100.0 * attacker / ts.len() as f64).abs() < 1e-9);
        let mut rotated = ts.clone();
        rotated.rotate_left(rot.index(ts.len()));
        rotated.reverse();
        prop_assert_eq!(aggregate(&rotated, &[]).unwrap(), r);
    }

    #[test]
    fn scheduled_seeds_are_distinct(master in any::<u64>(), n in 1usize..30, rounds in 1u32..6) {
        let words: Vec<String> = (0..n).map(|i| format!("word{i}")).collect();
        let a = schedule(master, &words, rounds);
        prop_assert_eq!(a.len(), n * rounds as usize);
        let seeds: BTreeSet<u64> = a.iter().map(|g| g.seed).collect();
        prop_assert_eq!(seeds.len(), a.len());
        prop_assert_eq!(a, schedule(master, &words, rounds));
    }
}
