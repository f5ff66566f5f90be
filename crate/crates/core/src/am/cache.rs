//! Per-utterance cache of scorer outputs keyed by condition, with batched
//! forwarding of the active (left, center) pairs of a frame.

use std::collections::{BTreeSet, HashMap};

use crate::error::Result;
use crate::inventory::{ContextId, PhonemeInventory, TriphoneLabel};

use super::combine::{score_label, AcousticScales, ScoringMode};
use super::posteriors::FactorLookup;
use super::priors::ContextPriors;
use super::scorer::{ConditionBatch, ConditionalScores, FactoredScorer};

/// Scorer traffic counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ScorerStats {
    /// Number of `FactoredScorer::score` invocations.
    pub calls: usize,
    /// Left conditions forwarded, summed over calls.
    pub left_conditions: usize,
    /// (left, center) conditions forwarded, summed over calls.
    pub pair_conditions: usize,
}

impl ScorerStats {
    fn record(&mut self, batch: &ConditionBatch) {
        self.calls += 1;
        self.left_conditions += batch.lefts.len();
        self.pair_conditions += batch.pairs.len();
    }
}

#[derive(Clone, Debug, Default)]
pub struct FrameEntry {
    contexts: usize,
    left: Vec<f64>,
    center: HashMap<ContextId, Vec<f64>>,
    right: HashMap<(ContextId, usize), Vec<f64>>,
}

impl FrameEntry {
    fn absorb(&mut self, batch: &ConditionBatch, scores: ConditionalScores) {
        self.left = scores.left;
        for (&l, row) in batch.lefts.iter().zip(scores.center) {
            self.center.insert(l, row);
        }
        for (&p, row) in batch.pairs.iter().zip(scores.right) {
            self.right.insert(p, row);
        }
    }

    pub fn num_cached_pairs(&self) -> usize {
        self.right.len()
    }
}

impl FactorLookup for FrameEntry {
    fn num_contexts(&self) -> usize {
        self.contexts
    }

    fn left(&self, left: ContextId) -> Option<f64> {
        self.left.get(left.0).copied()
    }

    fn center(&self, left: ContextId, center: usize) -> Option<f64> {
        self.center.get(&left)?.get(center).copied()
    }

    fn right(&self, left: ContextId, center: usize, right: ContextId) -> Option<f64> {
        self.right.get(&(left, center))?.get(right.0).copied()
    }
}

/// One cache per utterance decode. Within a frame each distinct condition
/// reaches the scorer at most once.
#[derive(Clone, Debug, Default)]
pub struct ScoreCache {
    frames: HashMap<usize, FrameEntry>,
    stats: ScorerStats,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> ScorerStats {
        self.stats
    }

    pub fn frame(&self, frame: usize) -> Option<&FrameEntry> {
        self.frames.get(&frame)
    }

    /// Makes sure every requested condition of `frame` is cached, issuing at
    /// most one scorer call for the ones that are not.
    pub fn ensure(
        &mut self,
        scorer: &dyn FactoredScorer,
        frame: usize,
        lefts: &BTreeSet<ContextId>,
        pairs: &BTreeSet<(ContextId, usize)>,
    ) -> Result<&FrameEntry> {
        let contexts = scorer.num_contexts();
        let fresh = !self.frames.contains_key(&frame);
        let entry = self.frames.entry(frame).or_insert_with(|| FrameEntry {
            contexts,
            ..FrameEntry::default()
        });
        let batch = ConditionBatch {
            lefts: lefts.iter().copied().filter(|l| !entry.center.contains_key(l)).collect(),
            pairs: pairs.iter().copied().filter(|p| !entry.right.contains_key(p)).collect(),
        };
        if fresh || !batch.is_empty() {
            let scores = scorer.score(frame, &batch)?;
            self.stats.record(&batch);
            entry.absorb(&batch, scores);
        }
        Ok(entry)
    }
}

/// Conditions a label needs under a scoring mode.
fn conditions(
    mode: ScoringMode,
    contexts: usize,
    inventory: &PhonemeInventory,
    labels: &[TriphoneLabel],
) -> (BTreeSet<ContextId>, BTreeSet<(ContextId, usize)>) {
    let mut lefts = BTreeSet::new();
    let mut pairs = BTreeSet::new();
    match mode {
        ScoringMode::Mono => {
            if !labels.is_empty() {
                lefts.extend((0..contexts).map(ContextId));
            }
        }
        ScoringMode::Di => lefts.extend(labels.iter().map(|l| l.left)),
        ScoringMode::Tri => {
            for l in labels {
                lefts.insert(l.left);
                pairs.insert((l.left, inventory.center_index(l.center)));
            }
        }
    }
    (lefts, pairs)
}

/// Number of distinct (left, center) pairs among `labels`.
pub fn active_pair_count(inventory: &PhonemeInventory, labels: &[TriphoneLabel]) -> usize {
    labels
        .iter()
        .map(|l| (l.left, inventory.center_index(l.center)))
        .collect::<BTreeSet<_>>()
        .len()
}

/// Scores every label of one frame through the cache: the active
/// conditions are deduplicated and forwarded in one batch.
#[allow(clippy::too_many_arguments)]
pub fn batch_score_frame(
    scorer: &dyn FactoredScorer,
    cache: &mut ScoreCache,
    frame: usize,
    labels: &[TriphoneLabel],
    priors: &ContextPriors,
    scales: &AcousticScales,
    inventory: &PhonemeInventory,
    mode: ScoringMode,
) -> Result<Vec<f64>> {
    let (lefts, pairs) = conditions(mode, scorer.num_contexts(), inventory, labels);
    let entry = cache.ensure(scorer, frame, &lefts, &pairs)?;
    labels
        .iter()
        .map(|label| score_label(mode, entry, priors, scales, inventory, label))
        .collect()
}

/// Reference path: one scorer call per label, nothing shared.
#[allow(clippy::too_many_arguments)]
pub fn naive_score_frame(
    scorer: &dyn FactoredScorer,
    stats: &mut ScorerStats,
    frame: usize,
    labels: &[TriphoneLabel],
    priors: &ContextPriors,
    scales: &AcousticScales,
    inventory: &PhonemeInventory,
    mode: ScoringMode,
) -> Result<Vec<f64>> {
    labels
        .iter()
        .map(|label| {
            let (lefts, pairs) = conditions(mode, scorer.num_contexts(), inventory, std::slice::from_ref(label));
            let batch = ConditionBatch {
                lefts: lefts.into_iter().collect(),
                pairs: pairs.into_iter().collect(),
            };
            let scores = scorer.score(frame, &batch)?;
            stats.record(&batch);
            let mut entry = FrameEntry {
                contexts: scorer.num_contexts(),
                ..FrameEntry::default()
            };
            entry.absorb(&batch, scores);
            score_label(mode, &entry, priors, scales, inventory, label)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::am::priors::estimate_priors_from_labels;
    use crate::am::scorer::{synthetic_scorer, SyntheticConfig};
    use crate::inventory::{CenterState, PhonemeInventory, StateSpace};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (StateSpace, crate::am::scorer::TableScorer, ContextPriors) {
        let space = StateSpace::new(PhonemeInventory::parse("sil\na\nb\nc\n").unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth: Vec<_> = (0..6).map(|_| space.label_at(rng.random_range(0..space.len())).unwrap()).collect();
        let scorer = synthetic_scorer(
            &space,
            &truth,
            SyntheticConfig {
                peak: 0.5,
                jitter: 1.0,
                seed,
            },
        )
        .unwrap();
        let priors = estimate_priors_from_labels(&space, [truth.as_slice()], 1e-3).unwrap();
        (space, scorer, priors)
    }

    #[test]
    fn hundred_hyps_seven_pairs_one_call() {
        let (space, scorer, priors) = setup(1);
        let inv = space.inventory();
        let pairs: Vec<(ContextId, CenterState)> = (0..7).map(|i| (ContextId(i % 4), inv.center_from_index(i))).collect();
        let labels: Vec<TriphoneLabel> = (0..100)
            .map(|i| {
                let (left, center) = pairs[i % 7];
                TriphoneLabel {
                    left,
                    center,
                    right: ContextId(i % 3),
                }
            })
            .collect();
        assert_eq!(active_pair_count(inv, &labels), 7);
        let mut cache = ScoreCache::new();
        let scales = AcousticScales::default();
        batch_score_frame(&scorer, &mut cache, 2, &labels, &priors, &scales, inv, ScoringMode::Tri).unwrap();
        assert_eq!(cache.stats().calls, 1);
        assert_eq!(cache.stats().pair_conditions, 7);

        batch_score_frame(&scorer, &mut cache, 2, &labels, &priors, &scales, inv, ScoringMode::Tri).unwrap();
        assert_eq!(cache.stats().calls, 1, "second query must be served from cache");
    }

    #[test]
    fn batched_equals_naive_bitwise() {
        for seed in 0..20 {
            let (space, scorer, priors) = setup(seed);
            let inv = space.inventory();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let scales = AcousticScales {
                gamma_left: rng.random_range(0.0..2.0),
                gamma_center: rng.random_range(0.0..2.0),
                gamma_right: rng.random_range(0.0..2.0),
            };
            for mode in [ScoringMode::Mono, ScoringMode::Di, ScoringMode::Tri] {
                let mut cache = ScoreCache::new();
                let mut naive = ScorerStats::default();
                for frame in 0..scorer.num_frames() {
                    let labels: Vec<_> = (0..30).map(|_| space.label_at(rng.random_range(0..space.len())).unwrap()).collect();
                    let a = batch_score_frame(&scorer, &mut cache, frame, &labels, &priors, &scales, inv, mode).unwrap();
                    let b = naive_score_frame(&scorer, &mut naive, frame, &labels, &priors, &scales, inv, mode).unwrap();
                    assert_eq!(a.len(), b.len());
                    for (x, y) in a.iter().zip(&b) {
                        assert_eq!(x.to_bits(), y.to_bits(), "mode {mode}");
                    }
                }
                assert!(cache.stats().calls <= naive.calls);
            }
        }
    }

    #[test]
    fn calls_bounded_by_distinct_pairs() {
        let (space, scorer, priors) = setup(5);
        let inv = space.inventory();
        let labels: Vec<_> = space.labels().take(40).collect();
        let mut cache = ScoreCache::new();
        batch_score_frame(&scorer, &mut cache, 0, &labels, &priors, &AcousticScales::default(), inv, ScoringMode::Tri).unwrap();
        assert!(cache.stats().calls <= active_pair_count(inv, &labels));
        assert_eq!(cache.frame(0).unwrap().num_cached_pairs(), active_pair_count(inv, &labels));
    }
}
