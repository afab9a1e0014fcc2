//! Players. Every agent sees only its role's view of the game.

pub mod chat;
pub mod qa;
pub mod scripted;

use crate::error::Result;
use crate::game::RoleView;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgentAction {
    Utter(String),
    Guess(String),
}

pub trait Agent: Send {
    /// Short spec string recorded in transcripts.
    fn name(&self) -> String;

    /// Called once before the game. Attackers receive the target; an error
    /// here means the agent has no material for this word.
    fn prepare(&mut self, _target: Option<&str>) -> Result<()> {
        Ok(())
    }

    fn act(&mut self, view: &RoleView) -> Result<AgentAction>;

    /// The prediction demanded at the horizon when the guess is unused.
    fn forced_guess(&mut self, _view: &RoleView) -> Option<String> {
        None
    }
}

impl<A: Agent + ?Sized> Agent for Box<A> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn prepare(&mut self, target: Option<&str>) -> Result<()> {
        (**self).prepare(target)
    }

    fn act(&mut self, view: &RoleView) -> Result<AgentAction> {
        (**self).act(view)
    }

    fn forced_guess(&mut self, view: &RoleView) -> Option<String> {
        (**self).forced_guess(view)
    }
}

/// Stateless single-turn reply, the shape exposed over the defender API.
pub trait Responder: Send + Sync {
    fn respond(&self, post: &str) -> String;
}
