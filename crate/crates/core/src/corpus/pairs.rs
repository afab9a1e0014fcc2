//! Post/response pairs and the two disjoint dataset splits.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[serde(alias = "attacker-split")]
    Attacker,
    #[serde(alias = "defender-split")]
    Defender,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostResponsePair {
    pub post: String,
    pub golden_response: String,
    pub split: Split,
}

#[derive(Deserialize)]
struct RawPair {
    post: Option<String>,
    response: Option<String>,
    split: Option<Split>,
}

pub fn parse_pair_lines(lines: &[String]) -> Result<Vec<PostResponsePair>> {
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::Malformed { line: i + 1, message };
        let raw: RawPair = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        let post = raw.post.filter(|s| !s.trim().is_empty()).ok_or_else(|| malformed("missing post".into()))?;
        let golden_response = raw
            .response
            .filter(|s| !s.trim().is_empty())
            .ok_or_else(|| malformed("missing response".into()))?;
        let split = raw.split.ok_or_else(|| malformed("missing split".into()))?;
        out.push(PostResponsePair {
            post,
            golden_response,
            split,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(out)
}

pub fn load_pairs(path: &Path) -> Result<Vec<PostResponsePair>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pair_lines(&super::decode_lines(&bytes)?)
}

/// Fails when any identical pair occurs in both splits.
pub fn check_disjoint(pairs: &[PostResponsePair]) -> Result<()> {
    let attacker: HashSet<(&str, &str)> = pairs
        .iter()
        .filter(|p| p.split == Split::Attacker)
        .map(|p| (p.post.as_str(), p.golden_response.as_str()))
        .collect();
    match pairs
        .iter()
        .find(|p| p.split == Split::Defender && attacker.contains(&(p.post.as_str(), p.golden_response.as_str())))
    {
        Some(p) => Err(Error::Config(format!("pair {:?} appears in both splits", p.post))),
        None => Ok(()),
    }
}
