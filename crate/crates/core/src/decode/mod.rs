//! Time-synchronous Viterbi beam search over the lexical prefix tree, an
//! exhaustive oracle decoder and independent path re-scoring.

mod oracle;
mod rescore;
mod search;
mod throughput;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::align::TransitionModel;
use crate::am::{AcousticScales, ContextPriors, ScorerStats, ScoringMode};
use crate::error::{Error, Result};
use crate::inventory::{PhonemeInventory, TriphoneLabel};
use crate::lexicon::{Lexicon, WordId};
use crate::lm::{LmWord, NGramLM};
use crate::tree::PrefixTree;

pub use oracle::{brute_force_decode, BruteForceResult, BRUTE_FORCE_LIMIT};
pub use rescore::{rescore_alignment, word_end_frames};
pub use search::decode;
pub use throughput::{measure_throughput, ThroughputReport};

/// The static models a decode runs against, all over one inventory.
#[derive(Clone, Copy)]
pub struct SearchModels<'a> {
    pub inventory: &'a PhonemeInventory,
    pub lexicon: &'a Lexicon,
    pub tree: &'a PrefixTree,
    pub priors: &'a ContextPriors,
    pub lm: &'a NGramLM,
}

impl SearchModels<'_> {
    /// LM vocabulary id of every lexicon word.
    pub fn lm_words(&self) -> Result<Vec<LmWord>> {
        self.lexicon.words().iter().map(|w| self.lm.word_id(w)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamConfig {
    /// Maximum score gap to the best hypothesis of a frame.
    pub beam_logwidth: f64,
    /// Cap on hypotheses kept per frame.
    pub max_hyps: usize,
    /// Gap applied to hypotheses that just emitted a word.
    pub word_end_beam: f64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            beam_logwidth: 60.0,
            max_hyps: 5000,
            word_end_beam: 40.0,
        }
    }
}

impl BeamConfig {
    /// No pruning at all.
    pub fn unlimited() -> Self {
        Self {
            beam_logwidth: f64::INFINITY,
            max_hyps: usize::MAX,
            word_end_beam: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beam_logwidth > 0.0) || !(self.word_end_beam > 0.0) || self.max_hyps == 0 {
            return Err(Error::Config(format!("beam settings must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// How acoustic scores reach the scorer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScoringPath {
    /// Deduplicated active conditions, one call per frame, cached.
    #[default]
    Batched,
    /// One call per hypothesis.
    Naive,
}

impl fmt::Display for ScoringPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoringPath::Batched => "on",
            ScoringPath::Naive => "off",
        })
    }
}

impl FromStr for ScoringPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on" | "batched" => Ok(ScoringPath::Batched),
            "off" | "naive" => Ok(ScoringPath::Naive),
            other => Err(Error::Config(format!("cache must be `on` or `off`, got `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecodeParams {
    pub scales: AcousticScales,
    pub transitions: TransitionModel,
    /// LM scale.
    pub alpha: f64,
    pub beam: BeamConfig,
    pub mode: ScoringMode,
    pub scoring: ScoringPath,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self {
            scales: AcousticScales::default(),
            transitions: TransitionModel::default(),
            alpha: 1.0,
            beam: BeamConfig::default(),
            mode: ScoringMode::Tri,
            scoring: ScoringPath::Batched,
        }
    }
}

impl DecodeParams {
    pub fn validate(&self) -> Result<()> {
        self.scales.validate()?;
        self.transitions.validate()?;
        self.beam.validate()?;
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::Config(format!("LM scale must be finite and >= 0, got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    pub words: Vec<String>,
    pub word_ids: Vec<WordId>,
    pub score: f64,
    /// Traced-back label of every frame.
    pub labels: Vec<TriphoneLabel>,
    /// Distinct (left, center) pairs scored per frame.
    pub active_pairs: Vec<usize>,
    /// Hypotheses scored per frame.
    pub active_hyps: Vec<usize>,
    pub stats: ScorerStats,
    pub elapsed: Duration,
}

impl DecodeResult {
    pub fn num_frames(&self) -> usize {
        self.labels.len()
    }

    /// `<utt> <score> <word ...>`
    pub fn to_line(&self, utt: &str) -> String {
        let mut line = format!("{utt} {:.6}", self.score);
        for w in &self.words {
            line.push(' ');
            line.push_str(w);
        }
        line
    }

    /// Equality on everything but wall-clock time.
    pub fn same_outcome(&self, other: &DecodeResult) -> bool {
        self.words == other.words
            && self.score.to_bits() == other.score.to_bits()
            && self.labels == other.labels
            && self.active_pairs == other.active_pairs
            && self.active_hyps == other.active_hyps
            && self.stats == other.stats
    }
}
