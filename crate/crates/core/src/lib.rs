//! Adversarial Taboo: corpora, concept graph, judge, game engine, agents and
//! the tournament runner.
//!
//! Numeric code is generic over [`Scalar`]; the aliases below fix `f64`,
//! which is what the game layer uses.

pub mod agents;
pub mod classifier;
pub mod corpus;
pub mod error;
pub mod game;
pub mod graph;
pub mod judge;
pub mod scalar;
pub mod tournament;
pub mod transcript;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type LanguageModel = corpus::lm::NGramLm<f64>;
pub type Bm25 = corpus::bm25::Bm25Index<f64>;
pub type LinearModel = classifier::LinearModel<f64>;
pub type RankedAnswer = agents::qa::RankedAnswer<f64>;
