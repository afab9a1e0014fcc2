//! The game state machine: turn order, the single guess, horizon handling
//! and outcomes.

use serde::{Deserialize, Serialize};

use crate::corpus::text::tokenize;
use crate::error::{Error, Result};
use crate::judge::{same_word, JudgeConfig, Referee, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Attacker,
    Defender,
}

impl Role {
    pub fn other(self) -> Role {
        match self {
            Role::Attacker => Role::Defender,
            Role::Defender => Role::Attacker,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbortPolicy {
    /// Exhausted retries end the game as `Aborted`.
    #[default]
    Separate,
    /// Exhausted retries hand the win to the other role.
    OpponentWin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub max_turns: u32,
    pub judge: JudgeConfig,
    pub abort_policy: AbortPolicy,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            max_turns: 10,
            judge: JudgeConfig::default(),
            abort_policy: AbortPolicy::Separate,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    AttackerWin,
    DefenderWin,
    Tie,
    Aborted,
}

impl OutcomeKind {
    fn win_for(role: Role) -> OutcomeKind {
        match role {
            Role::Attacker => OutcomeKind::AttackerWin,
            Role::Defender => OutcomeKind::DefenderWin,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbortInfo {
    pub role: Role,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    /// 1-based turn in which the game ended.
    pub turn: u32,
    /// The defender won with the guess demanded at the horizon.
    #[serde(default)]
    pub forced: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort: Option<AbortInfo>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Status {
    Running,
    Finished(Outcome),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Utter,
    Guess,
    ForcedGuess,
    Abort,
}

/// One engine transition as it appears in transcripts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub seq: u64,
    /// Logical clock; equals `seq`.
    pub ts: u64,
    pub role: Role,
    pub kind: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub role: Role,
    pub text: String,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub verdict: Verdict,
    pub accepted: bool,
    pub retries_left: u32,
    pub outcome: Option<Outcome>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuessReport {
    pub correct: bool,
    pub outcome: Option<Outcome>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuessEntry {
    pub word: String,
    pub correct: bool,
    pub forced: bool,
}

/// What one role is allowed to see. The target is withheld from the
/// defender until the game is over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoleView {
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub max_turns: u32,
    pub turn: u32,
    pub history: Vec<Utterance>,
    pub guesses: Vec<GuessEntry>,
    pub next_to_act: Role,
    pub your_turn: bool,
    pub guess_available: bool,
    pub awaiting_forced_guess: bool,
    /// Texts of this role rejected since its last accepted utterance.
    pub rejected: Vec<String>,
    pub retries_left: u32,
    pub finished: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
}

impl RoleView {
    pub fn last_utterance(&self) -> Option<&Utterance> {
        self.history.last()
    }

    pub fn last_of(&self, role: Role) -> Option<&Utterance> {
        self.history.iter().rev().find(|u| u.role == role)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    target: String,
    cfg: GameConfig,
    history: Vec<Utterance>,
    next_to_act: Role,
    guess_used: bool,
    retries_used: u32,
    rejected: Vec<String>,
    awaiting_forced: bool,
    guesses: Vec<GuessEntry>,
    actions: Vec<ActionRecord>,
    status: Status,
}

impl GameState {
    pub fn new(cfg: GameConfig, target: &str) -> Result<Self> {
        if tokenize(target).is_empty() {
            return Err(Error::EmptyTarget);
        }
        if cfg.max_turns < 1 {
            return Err(Error::Config("max_turns must be at least 1".into()));
        }
        Ok(GameState {
            target: target.trim().to_string(),
            cfg,
            history: Vec::new(),
            next_to_act: Role::Attacker,
            guess_used: false,
            retries_used: 0,
            rejected: Vec::new(),
            awaiting_forced: false,
            guesses: Vec::new(),
            actions: Vec::new(),
            status: Status::Running,
        })
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn config(&self) -> &GameConfig {
        &self.cfg
    }

    pub fn history(&self) -> &[Utterance] {
        &self.history
    }

    pub fn next_to_act(&self) -> Role {
        self.next_to_act
    }

    pub fn guess_used(&self) -> bool {
        self.guess_used
    }

    pub fn status(&self) -> &Status {
        &self.status
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        match &self.status {
            Status::Finished(o) => Some(o),
            Status::Running => None,
        }
    }

    pub fn is_finished(&self) -> bool {
        self.outcome().is_some()
    }

    pub fn awaiting_forced_guess(&self) -> bool {
        self.awaiting_forced && !self.is_finished()
    }

    pub fn actions(&self) -> &[ActionRecord] {
        &self.actions
    }

    /// Turn currently being played, 1-based and capped at the horizon.
    pub fn turn(&self) -> u32 {
        ((self.history.len() / 2) as u32 + 1).min(self.cfg.max_turns)
    }

    pub fn retries_left(&self) -> u32 {
        self.cfg.judge.max_retries.saturating_sub(self.retries_used)
    }

    fn check_running(&self) -> Result<()> {
        if self.is_finished() {
            return Err(Error::GameFinished);
        }
        if self.awaiting_forced {
            return Err(Error::HorizonReached);
        }
        Ok(())
    }

    fn finish(&mut self, kind: OutcomeKind, turn: u32, forced: bool, abort: Option<AbortInfo>) -> Outcome {
        let o = Outcome {
            kind,
            turn,
            forced,
            abort,
        };
        self.status = Status::Finished(o.clone());
        o
    }

    fn record(&mut self, role: Role, kind: ActionKind) -> &mut ActionRecord {
        let seq = self.actions.len() as u64;
        self.actions.push(ActionRecord {
            seq,
            ts: seq,
            role,
            kind,
            text: None,
            word: None,
            verdict: None,
            accepted: None,
            correct: None,
            reason: None,
        });
        self.actions.last_mut().expect("just pushed")
    }

    fn abort_outcome(&mut self, role: Role, reason: String) -> Outcome {
        let kind = match self.cfg.abort_policy {
            AbortPolicy::Separate => OutcomeKind::Aborted,
            AbortPolicy::OpponentWin => OutcomeKind::win_for(role.other()),
        };
        let turn = self.turn();
        self.finish(kind, turn, false, Some(AbortInfo { role, reason }))
    }

    pub fn submit_utterance(&mut self, referee: &impl Referee, role: Role, text: &str) -> Result<StepReport> {
        self.check_running()?;
        if role != self.next_to_act {
            return Err(Error::OutOfTurn(role));
        }
        let context = self.history.last().map(|u| u.text.as_str());
        let verdict = referee.check(context, text, role, &self.target)?;
        let accepted = verdict.accepted();
        let rec = self.record(role, ActionKind::Utter);
        rec.text = Some(text.to_string());
        rec.verdict = Some(verdict.clone());
        rec.accepted = Some(accepted);

        if !accepted {
            self.retries_used += 1;
            self.rejected.push(text.to_string());
            let outcome = if self.retries_used > self.cfg.judge.max_retries {
                let reason = format!("retries exhausted: {}", verdict.reason().unwrap_or("rejected"));
                Some(self.abort_outcome(role, reason))
            } else {
                None
            };
            return Ok(StepReport {
                verdict,
                accepted,
                retries_left: self.retries_left(),
                outcome,
            });
        }

        self.retries_used = 0;
        self.rejected.clear();
        let turn = self.turn();
        self.history.push(Utterance {
            role,
            text: text.to_string(),
            verdict: verdict.clone(),
        });
        let mut outcome = None;
        if role == Role::Defender && verdict.contains_target == Some(true) {
            outcome = Some(self.finish(OutcomeKind::AttackerWin, turn, false, None));
        } else {
            self.next_to_act = role.other();
            if self.history.len() as u32 >= 2 * self.cfg.max_turns {
                if self.guess_used {
                    outcome = Some(self.finish(OutcomeKind::Tie, self.cfg.max_turns, false, None));
                } else {
                    self.awaiting_forced = true;
                }
            }
        }
        Ok(StepReport {
            verdict,
            accepted,
            retries_left: self.retries_left(),
            outcome,
        })
    }

    /// The defender's single guess, only before its utterance in a turn.
    pub fn submit_guess(&mut self, word: &str) -> Result<GuessReport> {
        self.check_running()?;
        if tokenize(word).is_empty() {
            return Err(Error::EmptyText);
        }
        if self.guess_used {
            return Err(Error::GuessUsed);
        }
        if self.next_to_act != Role::Defender {
            return Err(Error::GuessOutsideWindow);
        }
        let correct = same_word(word, &self.target);
        let rec = self.record(Role::Defender, ActionKind::Guess);
        rec.word = Some(word.to_string());
        rec.correct = Some(correct);
        self.guess_used = true;
        self.guesses.push(GuessEntry {
            word: word.to_string(),
            correct,
            forced: false,
        });
        let outcome = correct.then(|| {
            let turn = self.turn();
            self.finish(OutcomeKind::DefenderWin, turn, false, None)
        });
        Ok(GuessReport { correct, outcome })
    }

    /// Resolves a game that reached `2T` utterances with the guess unused.
    pub fn finalize_at_horizon(&mut self, forced_guess: Option<&str>) -> Result<Outcome> {
        if self.is_finished() {
            return Err(Error::GameFinished);
        }
        if !self.awaiting_forced {
            return Err(Error::HorizonNotReached);
        }
        let correct = forced_guess.is_some_and(|w| same_word(w, &self.target));
        let rec = self.record(Role::Defender, ActionKind::ForcedGuess);
        rec.word = forced_guess.map(str::to_string);
        rec.correct = Some(correct);
        if let Some(w) = forced_guess {
            self.guesses.push(GuessEntry {
                word: w.to_string(),
                correct,
                forced: true,
            });
        }
        self.guess_used = true;
        let t = self.cfg.max_turns;
        Ok(if correct {
            self.finish(OutcomeKind::DefenderWin, t, true, None)
        } else {
            self.finish(OutcomeKind::Tie, t, false, None)
        })
    }

    /// Ends a running game because `role` could not produce an action.
    pub fn abort(&mut self, role: Role, reason: &str) -> Result<Outcome> {
        if self.is_finished() {
            return Err(Error::GameFinished);
        }
        let rec = self.record(role, ActionKind::Abort);
        rec.reason = Some(reason.to_string());
        Ok(self.abort_outcome(role, reason.to_string()))
    }

    pub fn view(&self, role: Role) -> RoleView {
        let finished = self.is_finished();
        let target = (role == Role::Attacker || finished).then(|| self.target.clone());
        let own_turn = !finished && (self.next_to_act == role || (self.awaiting_forced && role == Role::Defender));
        RoleView {
            role,
            target,
            max_turns: self.cfg.max_turns,
            turn: self.turn(),
            history: self.history.clone(),
            guesses: self.guesses.clone(),
            next_to_act: self.next_to_act,
            your_turn: own_turn,
            guess_available: !finished && !self.guess_used && role == Role::Defender,
            awaiting_forced_guess: self.awaiting_forced_guess(),
            rejected: if self.next_to_act == role { self.rejected.clone() } else { Vec::new() },
            retries_left: self.retries_left(),
            finished,
            outcome: self.outcome().cloned(),
        }
    }
}
