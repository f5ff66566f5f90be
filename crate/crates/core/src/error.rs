use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("invalid phoneme inventory: {0}")]
    Inventory(String),

    #[error("word `{word}`: {reason}")]
    Lexicon { word: String, reason: String },

    #[error("empty lexicon")]
    EmptyLexicon,

    #[error("empty pronunciation")]
    EmptyPronunciation,

    #[error("{what}:{line}: {reason}")]
    Parse {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("{what}: {reason} at byte offset {offset}")]
    Binary {
        what: &'static str,
        offset: usize,
        reason: String,
    },

    #[error("frame {frame}: {reason}")]
    BadDistribution { frame: usize, reason: String },

    #[error("no frames to estimate from")]
    EmptyCorpus,

    #[error("prior for {0} is zero or missing; priors must be floored")]
    MissingPrior(String),

    #[error("utterance too short: {states} states need at least {states} frames, got {frames}")]
    UtteranceTooShort { states: usize, frames: usize },

    #[error("no path through the HMM: {0}")]
    NoPath(String),

    #[error("invalid alignment for `{utt}`: {reason}")]
    InvalidAlignment { utt: String, reason: String },

    #[error("word `{0}` is out of vocabulary")]
    OutOfVocabulary(String),

    #[error("empty beam at frame {frame}")]
    EmptyBeam { frame: usize },

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
