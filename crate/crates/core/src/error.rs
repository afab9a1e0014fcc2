use std::path::PathBuf;

use thiserror::Error;

use crate::game::Role;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("text is empty")]
    EmptyText,
    #[error("concreteness filter requested but no table is loaded")]
    MissingConcreteness,
    #[error("token {0:?} is outside the closed vocabulary")]
    OutOfVocabulary(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no sentence mentions {0:?}")]
    NoSentence(String),
    #[error("no qualifying post for {0:?}")]
    NoQualifyingPost(String),
    #[error("candidate pool exhausted")]
    PoolExhausted,
    #[error("model is not trained")]
    Untrained,
    #[error("no training examples")]
    NoExamples,
    #[error("defender api: {0}")]
    Api(String),
    #[error("query budget exhausted")]
    BudgetExhausted,
    #[error("target word is empty")]
    EmptyTarget,
    #[error("{0:?} acted out of turn")]
    OutOfTurn(Role),
    #[error("game is already finished")]
    GameFinished,
    #[error("the guess has already been used")]
    GuessUsed,
    #[error("guesses are only allowed in the defender window")]
    GuessOutsideWindow,
    #[error("the turn limit has been reached; a forced guess is pending")]
    HorizonReached,
    #[error("the turn limit has not been reached")]
    HorizonNotReached,
    #[error("transcript: {0}")]
    Transcript(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
