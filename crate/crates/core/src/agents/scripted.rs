//! Rule-driven defender: fixed replies keyed on cue words.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::nouns::is_noun;
use crate::corpus::text::{lemma, lemmas, tokenize};
use crate::error::{Error, Result};
use crate::game::{Role, RoleView};

use super::{Agent, AgentAction, Responder};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    pub cue: String,
    pub response: String,
}

/// `{noun}` in the default reply is replaced by the first noun of the post.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Script {
    #[serde(default = "default_reply")]
    pub default: String,
    pub rules: Vec<ScriptRule>,
}

fn default_reply() -> String {
    "that is a fair point about the {noun}".to_string()
}

impl Script {
    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Malformed {
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[derive(Clone, Debug)]
pub struct ScriptedDefender {
    script: Script,
}

impl ScriptedDefender {
    pub fn new(script: Script) -> Self {
        ScriptedDefender { script }
    }
}

impl Responder for ScriptedDefender {
    fn respond(&self, post: &str) -> String {
        let said = lemmas(post);
        if let Some(rule) = self.script.rules.iter().find(|r| said.contains(&lemma(&r.cue))) {
            return rule.response.clone();
        }
        let noun = tokenize(post).into_iter().find(|t| is_noun(t)).unwrap_or_else(|| "topic".into());
        self.script.default.replace("{noun}", &noun)
    }
}

impl Agent for ScriptedDefender {
    fn name(&self) -> String {
        "scripted".to_string()
    }

    fn act(&mut self, view: &RoleView) -> Result<AgentAction> {
        let post = view.last_of(Role::Attacker).map_or("", |u| u.text.as_str());
        Ok(AgentAction::Utter(self.respond(post)))
    }
}
