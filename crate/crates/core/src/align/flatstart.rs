//! Linear segmentation, forced alignment and Viterbi re-estimation.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::inventory::{PhonemeInventory, TriphoneLabel};
use crate::lexicon::{expand_states, Lexicon};

use super::emission::{EmissionSource, GaussianEmissions};
use super::gaussian::{estimate_gaussians, MonophoneGaussians, DEFAULT_VARIANCE_FLOOR};
use super::graph::{transcript_graph, viterbi};
use super::{Alignment, FeatureSequence, TransitionModel};

/// Run lengths for `states` states over `frames` frames: the first
/// `frames % states` runs are one frame longer.
pub fn segment_lengths(frames: usize, states: usize) -> Result<Vec<usize>> {
    if states > frames {
        return Err(Error::UtteranceTooShort { states, frames });
    }
    if states == 0 {
        return Ok(Vec::new());
    }
    let (q, r) = (frames / states, frames % states);
    Ok((0..states).map(|i| q + usize::from(i < r)).collect())
}

/// Uniform split of the frames over the states of the first pronunciation
/// of each word, without silence. An empty transcript aligns to silence.
pub fn linear_segmentation(
    inventory: &PhonemeInventory,
    lexicon: &Lexicon,
    utt: &str,
    words: &[String],
    frames: usize,
) -> Result<Alignment> {
    let mut states = Vec::new();
    for w in words {
        let id = lexicon.word_id(w).ok_or_else(|| Error::OutOfVocabulary(w.clone()))?;
        let pron = lexicon.pronunciations_of(id).next().ok_or_else(|| Error::OutOfVocabulary(w.clone()))?;
        states.extend(expand_states(inventory, &pron.phones)?);
    }
    let labels = if states.is_empty() {
        if frames == 0 {
            return Err(Error::UtteranceTooShort { states: 1, frames });
        }
        vec![inventory.silence_label(); frames]
    } else {
        let lengths = segment_lengths(frames, states.len())?;
        states
            .iter()
            .zip(lengths)
            .flat_map(|(&l, n)| std::iter::repeat_n(l, n))
            .collect()
    };
    Ok(Alignment {
        utt: utt.to_string(),
        words: words.to_vec(),
        labels,
    })
}

/// Maximum-score path through the expanded HMM of `words`.
pub fn viterbi_forced_align(
    inventory: &PhonemeInventory,
    lexicon: &Lexicon,
    utt: &str,
    words: &[String],
    emissions: &dyn EmissionSource,
    transitions: &TransitionModel,
    allow_silence: bool,
) -> Result<(Alignment, f64)> {
    let graph = transcript_graph(inventory, lexicon, words, allow_silence)?;
    let frames = emissions.num_frames();
    let needed = graph.min_path_len().unwrap_or(usize::MAX);
    if needed > frames {
        return Err(Error::UtteranceTooShort { states: needed, frames });
    }
    let mut distinct: Vec<TriphoneLabel> = Vec::new();
    let mut slot: HashMap<TriphoneLabel, usize> = HashMap::new();
    let state_slot: Vec<usize> = graph
        .states
        .iter()
        .map(|s| {
            *slot.entry(s.label).or_insert_with(|| {
                distinct.push(s.label);
                distinct.len() - 1
            })
        })
        .collect();
    let mut table = Vec::with_capacity(frames);
    for t in 0..frames {
        let scores = emissions.frame_scores(t, &distinct)?;
        table.push(state_slot.iter().map(|&k| scores[k]).collect::<Vec<f64>>());
    }
    let path = viterbi(&graph, &table, transitions).map_err(|e| match e {
        Error::NoPath(reason) => Error::NoPath(format!("utterance `{utt}`: {reason}")),
        other => other,
    })?;
    let labels = path.states.iter().map(|&s| graph.states[s].label).collect();
    Ok((
        Alignment {
            utt: utt.to_string(),
            words: words.to_vec(),
            labels,
        },
        path.score,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealignConfig {
    pub iterations: usize,
    pub variance_floor: f64,
    pub allow_silence: bool,
}

impl Default for RealignConfig {
    fn default() -> Self {
        Self {
            iterations: 5,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
            allow_silence: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RealignOutput {
    pub alignments: Vec<Alignment>,
    /// Total Viterbi log score after each iteration.
    pub scores: Vec<f64>,
    /// Model estimated in the last iteration.
    pub model: Option<MonophoneGaussians>,
}

/// Alternates Gaussian estimation on the current alignments with forced
/// realignment under the new model.
pub fn realign_corpus(
    inventory: &PhonemeInventory,
    lexicon: &Lexicon,
    features: &[FeatureSequence],
    alignments: &[Alignment],
    transitions: &TransitionModel,
    config: &RealignConfig,
) -> Result<RealignOutput> {
    if features.len() != alignments.len() {
        return Err(Error::Dimension(format!(
            "{} feature sequences but {} alignments",
            features.len(),
            alignments.len()
        )));
    }
    let mut current = alignments.to_vec();
    let mut scores = Vec::with_capacity(config.iterations);
    let mut model = None;
    for _ in 0..config.iterations {
        let pairs: Vec<_> = features.iter().zip(&current).collect();
        let g = estimate_gaussians(inventory, &pairs, config.variance_floor)?;
        let mut total = 0.0;
        let mut next = Vec::with_capacity(current.len());
        for (f, a) in features.iter().zip(&current) {
            let source = GaussianEmissions {
                model: &g,
                inventory,
                features: f,
            };
            let (aligned, score) =
                viterbi_forced_align(inventory, lexicon, &a.utt, &a.words, &source, transitions, config.allow_silence)?;
            total += score;
            next.push(aligned);
        }
        current = next;
        scores.push(total);
        model = Some(g);
    }
    Ok(RealignOutput {
        alignments: current,
        scores,
        model,
    })
}
