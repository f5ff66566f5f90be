//! Factored acoustic scoring: posterior access, context priors, the scaled
//! log-linear combination and the active-pair score cache.

pub mod cache;
pub mod combine;
pub mod dump;
pub mod posteriors;
pub mod priors;
pub mod scorer;

pub use cache::{active_pair_count, batch_score_frame, naive_score_frame, ScoreCache, ScorerStats};
pub use combine::{
    combine_diphone_score, combine_factored_score, combine_monophone_score, score_label, AcousticScales, ScoringMode,
};
pub use dump::{decode_posteriors, encode_posteriors, table_scorer_from_file, write_posteriors};
pub use posteriors::{FactorLookup, FactoredFramePosteriors};
pub use priors::{estimate_priors, estimate_priors_from_labels, floor_distribution, ContextPriors, DEFAULT_PRIOR_FLOOR};
pub use scorer::{
    synthetic_scorer, ConditionBatch, ConditionalScores, FactoredScorer, GaussianScorer, SyntheticConfig, TableScorer,
    TriphoneGaussians,
};
