use std::collections::HashMap;

use crate::align::{transcript_graph, viterbi, EmissionSource, FactoredEmissions};
use crate::am::FactoredScorer;
use crate::error::{Error, Result};
use crate::inventory::TriphoneLabel;
use crate::lexicon::WordId;

use super::{DecodeParams, SearchModels};

/// Upper bound on word sequences times frames for exhaustive decoding.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct BruteForceResult {
    pub words: Vec<String>,
    pub word_ids: Vec<WordId>,
    pub score: f64,
    pub sequences: usize,
}

/// Global optimum over every word sequence of up to `max_words` words,
/// each scored by its own forced-alignment dynamic program. No pruning.
pub fn brute_force_decode(
    models: SearchModels<'_>,
    params: &DecodeParams,
    scorer: &dyn FactoredScorer,
    max_words: usize,
) -> Result<BruteForceResult> {
    params.validate()?;
    let vocab = models.lexicon.num_words() as u128;
    let frames = scorer.num_frames();
    let sequences: u128 = (0..=max_words as u32).map(|k| vocab.saturating_pow(k)).fold(0u128, u128::saturating_add);
    let work = sequences.saturating_mul(frames as u128);
    if work > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(format!("{sequences} word sequences over {frames} frames")));
    }
    let emissions = FactoredEmissions {
        scorer,
        priors: models.priors,
        scales: params.scales,
        inventory: models.inventory,
        mode: params.mode,
    };
    let lm_words = models.lm_words()?;
    let mut ac_cache: HashMap<TriphoneLabel, Vec<f64>> = HashMap::new();
    let mut best: Option<(f64, Vec<WordId>)> = None;
    let mut count = 0usize;

    let mut seq: Vec<usize> = Vec::new();
    loop {
        count += 1;
        let words: Vec<String> = seq.iter().map(|&w| models.lexicon.word(WordId(w)).to_string()).collect();
        let graph = transcript_graph(models.inventory, models.lexicon, &words, true)?;
        if graph.min_path_len().is_some_and(|n| n <= frames) {
            for s in &graph.states {
                if !ac_cache.contains_key(&s.label) {
                    let col = (0..frames)
                        .map(|t| Ok(emissions.frame_scores(t, std::slice::from_ref(&s.label))?[0]))
                        .collect::<Result<Vec<f64>>>()?;
                    ac_cache.insert(s.label, col);
                }
            }
            let table: Vec<Vec<f64>> = (0..frames)
                .map(|t| graph.states.iter().map(|s| ac_cache[&s.label][t]).collect())
                .collect();
            match viterbi(&graph, &table, &params.transitions) {
                Ok(path) => {
                    let mut history = models.lm.initial_history();
                    let mut lm = 0.0;
                    for &w in &seq {
                        lm += params.alpha * models.lm.score_ids(&history, lm_words[w]);
                        history.push(lm_words[w]);
                        models.lm.truncate_history(&mut history);
                    }
                    let total = path.score + lm;
                    if total > f64::NEG_INFINITY && best.as_ref().is_none_or(|(s, _)| total > *s) {
                        best = Some((total, seq.iter().map(|&w| WordId(w)).collect()));
                    }
                }
                Err(Error::NoPath(_)) => {}
                Err(e) => return Err(e),
            }
        }
        if !next_sequence(&mut seq, vocab as usize, max_words) {
            break;
        }
    }
    let (score, word_ids) = best.ok_or_else(|| Error::NoPath("no word sequence fits the utterance".into()))?;
    Ok(BruteForceResult {
        words: word_ids.iter().map(|&w| models.lexicon.word(w).to_string()).collect(),
        word_ids,
        score,
        sequences: count,
    })
}

/// Enumerates sequences by length, then lexicographically.
fn next_sequence(seq: &mut Vec<usize>, vocab: usize, max_len: usize) -> bool {
    if vocab == 0 {
        return false;
    }
    for i in (0..seq.len()).rev() {
        if seq[i] + 1 < vocab {
            seq[i] += 1;
            for x in &mut seq[i + 1..] {
                *x = 0;
            }
            return true;
        }
    }
    if seq.len() < max_len {
        let n = seq.len() + 1;
        seq.clear();
        seq.resize(n, 0);
        return true;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::next_sequence;

    #[test]
    fn enumerates_all_sequences() {
        let mut seq = Vec::new();
        let mut n = 1;
        while next_sequence(&mut seq, 3, 3) {
            n += 1;
        }
        assert_eq!(n, 1 + 3 + 9 + 27);
    }
}
