use crate::align::{EmissionSource, FactoredEmissions};
use crate::am::FactoredScorer;
use crate::error::{Error, Result};
use crate::inventory::{PhonemeInventory, TriphoneLabel};
use crate::lexicon::WordId;

use super::{DecodeParams, SearchModels};

fn ends_word(inventory: &PhonemeInventory, label: &TriphoneLabel) -> bool {
    label.center.substate() == Some(2) && label.right == inventory.boundary()
}

/// Frames on which a word is left: a final-phone substate 2 followed by a
/// different label or by the end of the utterance.
pub fn word_end_frames(inventory: &PhonemeInventory, labels: &[TriphoneLabel]) -> Vec<usize> {
    (0..labels.len())
        .filter(|&t| ends_word(inventory, &labels[t]) && labels.get(t + 1).is_none_or(|n| n != &labels[t]))
        .collect()
}

/// Total score of a frame-level path and its words, recomputed from the
/// labels alone in the decoder's summation order.
pub fn rescore_alignment(
    models: SearchModels<'_>,
    params: &DecodeParams,
    scorer: &dyn FactoredScorer,
    labels: &[TriphoneLabel],
    words: &[WordId],
) -> Result<f64> {
    let inv = models.inventory;
    if labels.is_empty() || labels.len() != scorer.num_frames() {
        return Err(Error::Dimension(format!(
            "{} labels for {} frames",
            labels.len(),
            scorer.num_frames()
        )));
    }
    let ends = word_end_frames(inv, labels);
    if ends.len() != words.len() {
        return Err(Error::Dimension(format!("path leaves {} words, {} given", ends.len(), words.len())));
    }
    let emissions = FactoredEmissions {
        scorer,
        priors: models.priors,
        scales: params.scales,
        inventory: inv,
        mode: params.mode,
    };
    let ac = |t: usize| -> Result<f64> { Ok(emissions.frame_scores(t, &labels[t..=t])?[0]) };
    let lm_words = models.lm_words()?;
    let mut history = models.lm.initial_history();
    let mut next_word = words.iter();
    let mut lm = |history: &mut Vec<_>| -> f64 {
        let w = lm_words[next_word.next().expect("word count checked").0];
        let term = params.alpha * models.lm.score_ids(history, w);
        history.push(w);
        models.lm.truncate_history(history);
        term
    };
    let tr = params.transitions;
    let mut score = 0.0 + ac(0)?;
    for t in 1..labels.len() {
        let (prev, cur) = (&labels[t - 1], &labels[t]);
        let silent = prev.center.is_silence();
        let mut s = score;
        if cur == prev {
            s += tr.scaled(silent, false);
        } else {
            if ends_word(inv, prev) {
                s += lm(&mut history);
            }
            s += tr.scaled(silent, true);
        }
        score = s + ac(t)?;
    }
    if ends_word(inv, &labels[labels.len() - 1]) {
        score += lm(&mut history);
    }
    Ok(score)
}
