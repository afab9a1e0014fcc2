//! Commonsense concept graph: relation-filtered edges, one-hop
//! neighborhoods and the target-biased random walk.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::text::lemma;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    RelatedTo,
    SimilarTo,
    IsA,
    HasA,
    Other,
}

impl Relation {
    /// Case-insensitive; accepts `RelatedTo`, `related_to`, `/r/RelatedTo`.
    pub fn parse(label: &str) -> Relation {
        let l = label.trim();
        let l = l.strip_prefix("/r/").unwrap_or(l);
        let norm: String = l
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        match norm.as_str() {
            "relatedto" => Relation::RelatedTo,
            "similarto" => Relation::SimilarTo,
            "isa" => Relation::IsA,
            "hasa" => Relation::HasA,
            _ => Relation::Other,
        }
    }

    pub fn is_kept(self) -> bool {
        self != Relation::Other
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptEdge {
    pub head: String,
    pub relation: Relation,
    pub tail: String,
    pub weight: f64,
}

/// `/c/en/ice_cream/n` and `Ice Cream` both become `ice cream`.
pub fn normalize_concept(raw: &str) -> String {
    let mut s = raw.trim();
    if let Some(rest) = s.strip_prefix("/c/") {
        let mut parts = rest.split('/');
        parts.next();
        s = parts.next().unwrap_or("");
    }
    s.replace('_', " ").trim().to_lowercase()
}

#[derive(Clone, Debug, Default)]
pub struct ConceptGraph {
    edges: Vec<ConceptEdge>,
    adjacency: BTreeMap<String, BTreeSet<String>>,
    by_lemma: BTreeMap<String, String>,
}

impl ConceptGraph {
    /// Self loops (equal lemmas) are dropped. Only kept relations contribute
    /// to neighborhoods; edges are treated as undirected.
    pub fn from_edges(edges: impl IntoIterator<Item = ConceptEdge>) -> Self {
        let mut g = ConceptGraph::default();
        for mut e in edges {
            e.head = normalize_concept(&e.head);
            e.tail = normalize_concept(&e.tail);
            if e.head.is_empty() || e.tail.is_empty() || lemma(&e.head) == lemma(&e.tail) {
                continue;
            }
            if e.relation.is_kept() {
                for (a, b) in [(&e.head, &e.tail), (&e.tail, &e.head)] {
                    g.adjacency.entry(a.clone()).or_default().insert(b.clone());
                    g.by_lemma.entry(lemma(a)).or_insert_with(|| a.clone());
                }
            }
            g.edges.push(e);
        }
        g
    }

    /// CSV with a `head,relation,tail,weight` header; weight may be omitted.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file)
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
        let mut edges = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Malformed {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let malformed = |message: &str| Error::Malformed {
                line,
                message: message.to_string(),
            };
            if rec.len() < 3 {
                return Err(malformed("expected head,relation,tail[,weight]"));
            }
            let weight = match rec.get(3).filter(|w| !w.is_empty()) {
                None => 1.0,
                Some(w) => w.parse::<f64>().map_err(|_| malformed("weight is not a number"))?,
            };
            if !(weight >= 0.0) {
                return Err(malformed("weight must be non-negative"));
            }
            edges.push(ConceptEdge {
                head: rec[0].to_string(),
                relation: Relation::parse(&rec[1]),
                tail: rec[2].to_string(),
                weight,
            });
        }
        Ok(Self::from_edges(edges))
    }

    pub fn edges(&self) -> &[ConceptEdge] {
        &self.edges
    }

    /// The node name for `concept`, matching exactly or by lemma.
    pub fn resolve(&self, concept: &str) -> Option<&str> {
        let c = normalize_concept(concept);
        if let Some((k, _)) = self.adjacency.get_key_value(&c) {
            return Some(k.as_str());
        }
        self.by_lemma.get(&lemma(&c)).map(String::as_str)
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.resolve(concept).is_some()
    }

    /// Concepts joined to `center` by a kept relation, in lexicographic order.
    /// An absent center has no neighbors.
    pub fn one_hop(&self, center: &str) -> Vec<String> {
        self.resolve(center)
            .and_then(|c| self.adjacency.get(c))
            .map(|s| s.iter().cloned().collect())
            .unwrap_or_default()
    }

    pub fn adjacent(&self, a: &str, b: &str) -> bool {
        match (self.resolve(a), self.resolve(b)) {
            (Some(a), Some(b)) => self.adjacency[a].contains(b),
            _ => false,
        }
    }

    /// One step of the walk toward `target`: the target itself with
    /// probability `bias`, otherwise a uniform one-hop neighbor.
    pub fn walk_step<R: Rng + ?Sized>(&self, target: &str, bias: f64, rng: &mut R) -> String {
        let neighbors = self.one_hop(target);
        let home = self.resolve(target).map_or_else(|| normalize_concept(target), str::to_string);
        if neighbors.is_empty() {
            tracing::debug!(target, "walk from an isolated concept stays on the target");
            return home;
        }
        if rng.gen::<f64>() < bias {
            home
        } else {
            neighbors[rng.gen_range(0..neighbors.len())].clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub bias: f64,
    pub rng_seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig { bias: 0.6, rng_seed: 0 }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.bias) {
            Ok(())
        } else {
            Err(Error::Config(format!("walk bias {} outside [0, 1]", self.bias)))
        }
    }
}

/// A walk with its own seeded stream. Each step is a fresh draw.
#[derive(Clone, Debug)]
pub struct Walker {
    bias: f64,
    rng: ChaCha8Rng,
}

impl Walker {
    pub fn new(cfg: WalkConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Walker {
            bias: cfg.bias,
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
        })
    }

    pub fn step(&mut self, graph: &ConceptGraph, target: &str) -> String {
        graph.walk_step(target, self.bias, &mut self.rng)
    }
}
