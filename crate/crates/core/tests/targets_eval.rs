mod common;

use std::collections::HashMap;

use fhmm::align::Alignment;
use fhmm::augment::{chunk, time_feature_mask, MaskParams};
use fhmm::targets::{smooth_targets, LSPolicy, SoftTargets};
use fhmm::wer::{corpus_wer, wer};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain recursive Levenshtein distance with memoization.
fn edit_distance(a: &[&str], b: &[&str]) -> usize {
    fn go<'a>(a: &[&'a str], b: &[&'a str], memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        if let Some(&d) = memo.get(&(a.len(), b.len())) {
            return d;
        }
        let sub = go(&a[1..], &b[1..], memo) + usize::from(a[0] != b[0]);
        let del = go(&a[1..], b, memo) + 1;
        let ins = go(a, &b[1..], memo) + 1;
        let d = sub.min(del).min(ins);
        memo.insert((a.len(), b.len()), d);
        d
    }
    go(a, b, &mut HashMap::new())
}

#[test]
fn wer_matches_recursive_edit_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let alphabet = ["a", "b", "c", "d"];
    for _ in 0..1000 {
        let r: Vec<&str> = (0..rng.random_range(0..=8)).map(|_| alphabet[rng.random_range(0..4)]).collect();
        let h: Vec<&str> = (0..rng.random_range(0..=8)).map(|_| alphabet[rng.random_range(0..4)]).collect();
        let c = wer(&r, &h);
        assert_eq!(c.errors(), edit_distance(&r, &h), "{r:?} / {h:?}");
        assert_eq!(c.reference_len, r.len());
        assert!(c.substitutions + c.deletions <= r.len());
        assert_eq!(r.len() - c.deletions + c.insertions, h.len());
    }
}

#[test]
fn corpus_totals_add_up() {
    let refs = vec![
        ("u1".to_string(), vec!["a".to_string(), "b".to_string()]),
        ("u2".to_string(), vec!["c".to_string()]),
    ];
    let hyps = vec![("u1".to_string(), vec!["a".to_string()])];
    let c = corpus_wer(&refs, &hyps);
    assert_eq!((c.deletions, c.reference_len), (2, 3));
    assert!((c.wer() - 2.0 / 3.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn chunks_cover_every_frame(len in 0usize..2000, chunk_len in 1usize..300) {
        let chunks = chunk(len, chunk_len, 0.5).unwrap();
        let stride = ((chunk_len as f64) * 0.5).round().max(1.0) as usize;
        let mut covered = vec![false; len];
        for (i, &(s, e)) in chunks.iter().enumerate() {
            prop_assert_eq!(s, i * stride);
            prop_assert!(s < e && e <= len && e - s <= chunk_len);
            covered[s..e].iter_mut().for_each(|c| *c = true);
        }
        prop_assert!(covered.iter().all(|&c| c));
        if len > 0 {
            prop_assert_eq!(chunks.last().unwrap().1, len);
        }
    }
}

#[test]
fn smoothed_targets_follow_the_context_only_rule() {
    let corpus = common::gaussian_corpus(1, 3, 3.0);
    let inv = &corpus.world.inv;
    let (c, k) = (inv.num_contexts(), inv.num_centers());
    for a in &corpus.truth {
        let t = smooth_targets(inv, a, &LSPolicy::default()).unwrap();
        for (i, label) in a.labels.iter().enumerate() {
            let center = inv.center_index(label.center);
            for (j, &v) in t.center_row(i).iter().enumerate() {
                assert_eq!(v, if j == center { 1.0 } else { 0.0 });
            }
            for (row, truth) in [(t.left_row(i), label.left.0), (t.right_row(i), label.right.0)] {
                for (j, &v) in row.iter().enumerate() {
                    let want = if j == truth { 0.8 } else { 0.2 / (c - 1) as f64 };
                    assert!((v - want).abs() < 1e-7);
                }
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            }
        }
        assert_eq!(t.center_row(0).len(), k);
        let back = SoftTargets::decode(&t.encode()).unwrap();
        assert_eq!(back.len(), t.len());
        for i in 0..t.len() {
            for (x, y) in t.left_row(i).iter().zip(back.left_row(i)) {
                assert!((x - y).abs() < 1e-7);
            }
        }
    }
}

#[test]
fn hard_targets_without_smoothing() {
    let corpus = common::gaussian_corpus(2, 1, 3.0);
    let inv = &corpus.world.inv;
    let a: &Alignment = &corpus.truth[0];
    let t = smooth_targets(inv, a, &LSPolicy::none()).unwrap();
    for i in 0..t.len() {
        for row in [t.left_row(i), t.center_row(i), t.right_row(i)] {
            assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
    }
    let bad = LSPolicy {
        epsilon: 1.5,
        ..LSPolicy::default()
    };
    assert!(smooth_targets(inv, a, &bad).is_err());
}

/// Replays the generator: width from `0..=min(max, extent)`, then start.
fn replay_time_band(seed: u64, frames: usize, max_width: usize) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = rng.random_range(0..=max_width.min(frames));
    let start = rng.random_range(0..=frames - width);
    (start, width)
}

#[test]
fn seeded_time_band_replays() {
    let (frames, dim) = (20, 4);
    let params = MaskParams {
        max_time_masks: 1,
        max_time_width: 3,
        max_feat_masks: 0,
        max_feat_width: 0,
    };
    let seed = (0..10_000u64).find(|&s| replay_time_band(s, frames, 3) == (5, 3)).unwrap();
    let mask = time_feature_mask(frames, dim, &params, seed);
    assert_eq!(mask.bands.time, vec![(5, 3)]);
    for t in 0..frames {
        for d in 0..dim {
            assert_eq!(mask.get(t, d), (5..=7).contains(&t));
        }
    }
    assert_eq!(mask, time_feature_mask(frames, dim, &params, seed));
}

proptest! {
    #[test]
    fn masks_are_unions_of_bands(frames in 1usize..60, dim in 1usize..12, seed in any::<u64>()) {
        let mask = time_feature_mask(frames, dim, &MaskParams::default(), seed);
        prop_assert!(mask.bands.time.len() <= 2 && mask.bands.feat.len() <= 1);
        for t in 0..frames {
            for d in 0..dim {
                let in_band = mask.bands.time.iter().any(|&(s, w)| (s..s + w).contains(&t))
                    || mask.bands.feat.iter().any(|&(s, w)| (s..s + w).contains(&d));
                prop_assert_eq!(mask.get(t, d), in_band);
            }
        }
    }
}
