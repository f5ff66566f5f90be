//! Factored hybrid HMM speech decoding and forced alignment over untied
//! triphone states.
//!
//! The acoustic score of a triphone state is the scaled log-linear sum of
//! three conditional posteriors (left context, center state given left,
//! right context given both) against their priors. On top of that sit a
//! beam-search decoder over a lexical prefix tree with a back-off n-gram
//! LM, a flat-start Gaussian alignment pipeline, prior estimation, target
//! generation and WER scoring.

pub mod align;
pub mod am;
pub mod augment;
pub mod config;
pub mod decode;
pub mod error;
pub mod inventory;
pub mod lexicon;
pub mod lm;
pub mod targets;
pub mod tree;
pub mod wer;

pub use error::{Error, Result};
pub use inventory::{build_state_space, CenterState, ContextId, PhonemeId, PhonemeInventory, StateSpace, TriphoneLabel};
pub use lexicon::{hmm_expand, Lexicon, WordId};
pub use lm::{load_arpa, NGramLM};
pub use tree::{build_prefix_tree, PrefixTree};
