//! Flat-start alignment: features, alignments, monophone Gaussians,
//! transition penalties and Viterbi forced alignment.

pub mod alignment;
pub mod emission;
pub mod features;
pub mod flatstart;
pub mod gaussian;
pub mod graph;
pub mod transition;

pub use alignment::{
    format_alignments, label_runs, load_alignments, parse_alignments, save_alignments, validate_alignment, Alignment,
};
pub use emission::{EmissionSource, FactoredEmissions, GaussianEmissions};
pub use features::FeatureSequence;
pub use flatstart::{
    linear_segmentation, realign_corpus, segment_lengths, viterbi_forced_align, RealignConfig, RealignOutput,
};
pub use gaussian::{
    estimate_gaussians, gaussian_frame_log_likelihood, MonophoneGaussians, StateGaussian, DEFAULT_VARIANCE_FLOOR,
};
pub use graph::{transcript_graph, viterbi, GraphState, StateGraph, ViterbiPath};
pub use transition::TransitionModel;
