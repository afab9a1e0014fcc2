//! JSONL game transcripts: a start record, one record per engine action and
//! a closing outcome record.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AbortPolicy, ActionKind, ActionRecord, GameConfig, GameState, Outcome, Role};
use crate::judge::{JudgeConfig, RecordedJudge, Referee};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub target: String,
    pub max_turns: u32,
    pub seed: u64,
    pub abort_policy: AbortPolicy,
    pub judge: JudgeConfig,
    pub attacker: String,
    pub defender: String,
    pub word_index: usize,
    pub round: u32,
}

impl StartRecord {
    pub fn game_config(&self) -> GameConfig {
        GameConfig {
            max_turns: self.max_turns,
            judge: self.judge.clone(),
            abort_policy: self.abort_policy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Start(StartRecord),
    Action(ActionRecord),
    Outcome(Outcome),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub start: StartRecord,
    pub actions: Vec<ActionRecord>,
    pub outcome: Outcome,
}

impl Transcript {
    /// Snapshot of a finished game.
    pub fn from_game(start: StartRecord, game: &GameState) -> Result<Self> {
        let outcome = game
            .outcome()
            .cloned()
            .ok_or_else(|| Error::Transcript("game is still running".into()))?;
        Ok(Transcript {
            start,
            actions: game.actions().to_vec(),
            outcome,
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let lines = std::iter::once(Line::Start(self.start.clone()))
            .chain(self.actions.iter().cloned().map(Line::Action))
            .chain(std::iter::once(Line::Outcome(self.outcome.clone())));
        for line in lines {
            out.push_str(&serde_json::to_string(&line).expect("transcript line serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut start = None;
        let mut actions = Vec::new();
        let mut outcome = None;
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let line: Line = serde_json::from_str(raw).map_err(|e| Error::Malformed {
                line: i + 1,
                message: e.to_string(),
            })?;
            let out_of_place = |what: &str| Error::Malformed {
                line: i + 1,
                message: format!("unexpected {what} record"),
            };
            match line {
                Line::Start(s) if start.is_none() => start = Some(s),
                Line::Action(a) if start.is_some() && outcome.is_none() => actions.push(a),
                Line::Outcome(o) if start.is_some() && outcome.is_none() => outcome = Some(o),
                Line::Start(_) => return Err(out_of_place("start")),
                Line::Action(_) => return Err(out_of_place("action")),
                Line::Outcome(_) => return Err(out_of_place("outcome")),
            }
        }
        Ok(Transcript {
            start: start.ok_or_else(|| Error::Transcript("missing start record".into()))?,
            actions,
            outcome: outcome.ok_or_else(|| Error::Transcript("missing outcome record".into()))?,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl(&text)
    }

    /// Re-applies the recorded actions to a fresh game using `referee` for
    /// utterances and returns the resulting outcome. Any mismatch in
    /// acceptance, guess correctness or the final outcome is an error.
    pub fn replay_with(&self, referee: &impl Referee) -> Result<Outcome> {
        let mut game = GameState::new(self.start.game_config(), &self.start.target)?;
        let mismatch = |seq: u64, what: &str| Error::Transcript(format!("action {seq}: {what} differs on replay"));
        for a in &self.actions {
            match a.kind {
                ActionKind::Utter => {
                    let text = a.text.as_deref().ok_or_else(|| mismatch(a.seq, "text"))?;
                    let r = game.submit_utterance(referee, a.role, text)?;
                    if a.accepted != Some(r.accepted) {
                        return Err(mismatch(a.seq, "acceptance"));
                    }
                    if let Some(v) = &a.verdict {
                        if *v != r.verdict {
                            return Err(mismatch(a.seq, "verdict"));
                        }
                    }
                }
                ActionKind::Guess => {
                    let word = a.word.as_deref().ok_or_else(|| mismatch(a.seq, "word"))?;
                    let r = game.submit_guess(word)?;
                    if a.correct != Some(r.correct) {
                        return Err(mismatch(a.seq, "guess"));
                    }
                }
                ActionKind::ForcedGuess => {
                    game.finalize_at_horizon(a.word.as_deref())?;
                }
                ActionKind::Abort => {
                    game.abort(a.role, a.reason.as_deref().unwrap_or("aborted"))?;
                }
            }
        }
        let got = game
            .outcome()
            .cloned()
            .ok_or_else(|| Error::Transcript("replayed game did not finish".into()))?;
        if got != self.outcome {
            return Err(Error::Transcript(format!(
                "outcome {:?} at turn {} differs from recorded {:?} at turn {}",
                got.kind, got.turn, self.outcome.kind, self.outcome.turn
            )));
        }
        Ok(got)
    }

    /// Replay driven by the verdicts stored in the transcript itself.
    pub fn replay(&self) -> Result<Outcome> {
        let verdicts = self
            .actions
            .iter()
            .filter(|a| a.kind == ActionKind::Utter)
            .map(|a| {
                a.verdict
                    .clone()
                    .ok_or_else(|| Error::Transcript(format!("action {} has no verdict", a.seq)))
            })
            .collect::<Result<Vec<_>>>()?;
        self.replay_with(&RecordedJudge::new(verdicts))
    }

    pub fn utterances(&self, role: Role) -> impl Iterator<Item = &str> {
        self.actions
            .iter()
            .filter(move |a| a.kind == ActionKind::Utter && a.role == role && a.accepted == Some(true))
            .filter_map(|a| a.text.as_deref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::OutcomeKind;
    use crate::judge::Verdict;

    struct Yes;

    impl Referee for Yes {
        fn check(&self, _c: Option<&str>, text: &str, role: Role, target: &str) -> Result<Verdict> {
            Ok(Verdict {
                fluency_score: 2.5,
                relevance_score: Some(0.3),
                fluent: true,
                relevant: true,
                single_sentence: true,
                contains_target: (role == Role::Defender).then(|| crate::judge::contains_target(text, target)),
                target_forbidden: false,
            })
        }
    }

    fn sample() -> Transcript {
        let start = StartRecord {
            target: "banana".into(),
            max_turns: 2,
            seed: 7,
            abort_policy: AbortPolicy::Separate,
            judge: JudgeConfig::default(),
            attacker: "scripted".into(),
            defender: "scripted".into(),
            word_index: 0,
            round: 0,
        };
        let mut g = GameState::new(start.game_config(), "banana").unwrap();
        g.submit_utterance(&Yes, Role::Attacker, "what is yellow?").unwrap();
        g.submit_guess("lemon").unwrap();
        g.submit_utterance(&Yes, Role::Defender, "the lemon is yellow.").unwrap();
        g.submit_utterance(&Yes, Role::Attacker, "what do monkeys eat?").unwrap();
        g.submit_utterance(&Yes, Role::Defender, "monkeys eat bananas.").unwrap();
        Transcript::from_game(start, &g).unwrap()
    }

    #[test]
    fn round_trip_and_replay() {
        let t = sample();
        assert_eq!(t.outcome.kind, OutcomeKind::AttackerWin);
        let text = t.to_jsonl();
        assert_eq!(text.lines().count(), t.actions.len() + 2);
        let back = Transcript::from_jsonl(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_jsonl(), text);
        assert_eq!(back.replay().unwrap(), t.outcome);
    }

    #[test]
    fn tampered_outcome_fails_replay() {
        let mut t = sample();
        t.outcome.kind = OutcomeKind::Tie;
        assert!(t.replay().is_err());
        assert!(Transcript::from_jsonl("{\"record\":\"outcome\",\"kind\":\"tie\",\"turn\":1}").is_err());
    }
}
