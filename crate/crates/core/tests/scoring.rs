mod common;

use std::collections::HashMap;

use common::{inventory, random_joint};
use fhmm::align::FeatureSequence;
use fhmm::am::{
    decode_posteriors, encode_posteriors, score_label, synthetic_scorer, AcousticScales, ContextPriors,
    FactoredFramePosteriors, FactoredScorer, GaussianScorer, ScoringMode, SyntheticConfig, TriphoneGaussians,
};
use fhmm::{StateSpace, TriphoneLabel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Marginals summed directly over label fields, independent of the
/// library's table layout.
struct Marginals {
    joint: HashMap<TriphoneLabel, f64>,
    lc: HashMap<(usize, usize), f64>,
    l: HashMap<usize, f64>,
    c: HashMap<usize, f64>,
}

impl Marginals {
    fn new(space: &StateSpace, joint: &[f64]) -> Self {
        let inv = space.inventory();
        let mut m = Marginals {
            joint: HashMap::new(),
            lc: HashMap::new(),
            l: HashMap::new(),
            c: HashMap::new(),
        };
        for (label, &p) in space.labels().zip(joint) {
            let c = inv.center_index(label.center);
            m.joint.insert(label, p);
            *m.lc.entry((label.left.0, c)).or_default() += p;
            *m.l.entry(label.left.0).or_default() += p;
            *m.c.entry(c).or_default() += p;
        }
        m
    }

    fn log_ratio(&self, prior: &Marginals, label: &TriphoneLabel, c: usize, mode: ScoringMode) -> f64 {
        match mode {
            ScoringMode::Tri => self.joint[label].ln() - prior.joint[label].ln(),
            ScoringMode::Di => self.lc[&(label.left.0, c)].ln() - prior.lc[&(label.left.0, c)].ln(),
            ScoringMode::Mono => self.c[&c].ln() - prior.c[&c].ln(),
        }
    }
}

fn check_chain_rule(seed: u64, phonemes: usize) {
    let space = StateSpace::new(inventory(phonemes));
    let inv = space.inventory();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_joint(&space, &mut rng);
    let pi = random_joint(&space, &mut rng);
    let post = FactoredFramePosteriors::from_joint(&space, &q).unwrap();
    let priors = ContextPriors::from_joint(&space, &pi).unwrap();
    let (mq, mp) = (Marginals::new(&space, &q), Marginals::new(&space, &pi));
    let scales = AcousticScales::default();
    for label in space.labels() {
        let c = inv.center_index(label.center);
        for mode in [ScoringMode::Tri, ScoringMode::Di, ScoringMode::Mono] {
            let got = score_label(mode, &post, &priors, &scales, inv, &label).unwrap();
            let want = mq.log_ratio(&mp, &label, c, mode);
            assert!((got - want).abs() < 1e-10, "seed {seed} {mode:?} {label:?}: {got} vs {want}");
        }
    }
}

#[test]
fn factored_score_is_the_joint_log_ratio() {
    for seed in 0..120 {
        check_chain_rule(seed, 3);
    }
}

proptest! {
    #[test]
    fn factored_score_is_the_joint_log_ratio_for_any_inventory(seed in any::<u64>(), phonemes in 1usize..=4) {
        check_chain_rule(seed, phonemes);
    }
}

#[test]
fn scales_weight_each_prior_factor() {
    let space = StateSpace::new(inventory(2));
    let inv = space.inventory();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let q = random_joint(&space, &mut rng);
    let pi = random_joint(&space, &mut rng);
    let post = FactoredFramePosteriors::from_joint(&space, &q).unwrap();
    let priors = ContextPriors::from_joint(&space, &pi).unwrap();
    let (mq, mp) = (Marginals::new(&space, &q), Marginals::new(&space, &pi));
    let scales = AcousticScales {
        gamma_left: 0.25,
        gamma_center: 0.5,
        gamma_right: 2.0,
    };
    for label in space.labels() {
        let c = inv.center_index(label.center);
        let (l, lc, lcr) = (mp.l[&label.left.0], mp.lc[&(label.left.0, c)], mp.joint[&label]);
        let prior_term = 0.25 * l.ln() + 0.5 * (lc / l).ln() + 2.0 * (lcr / lc).ln();
        let want = mq.joint[&label].ln() - prior_term;
        let got = score_label(ScoringMode::Tri, &post, &priors, &scales, inv, &label).unwrap();
        assert!((got - want).abs() < 1e-10);
        let mono = score_label(ScoringMode::Mono, &post, &priors, &scales, inv, &label).unwrap();
        assert!((mono - (mq.c[&c].ln() - 0.5 * mp.c[&c].ln())).abs() < 1e-10);
    }
}

#[test]
fn gaussian_scorer_factors_its_joint_posterior() {
    let space = StateSpace::new(inventory(2));
    let n = space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let dim = 3;
    let model = TriphoneGaussians {
        dim,
        means: (0..n).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect(),
        variances: (0..n).map(|_| (0..dim).map(|_| rng.random_range(0.5..2.0)).collect()).collect(),
        label_prior: random_joint(&space, &mut rng),
    };
    let rows: Vec<Vec<f64>> = (0..6).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let scorer = GaussianScorer::new(space.clone(), model, FeatureSequence::from_rows(&rows).unwrap()).unwrap();
    let inv = space.inventory();
    for t in 0..scorer.num_frames() {
        let joint = scorer.joint_posterior(t).unwrap();
        let post = scorer.frame_posteriors(t).unwrap();
        for (label, &p) in space.labels().zip(&joint) {
            let (l, r) = (label.left.0, label.right.0);
            let c = inv.center_index(label.center);
            let product = post.left[l] * post.center_row(label.left)[c] * post.right_row(label.left, c)[r];
            assert!((product - p).abs() < 1e-12);
        }
    }
}

#[test]
fn posterior_dump_round_trips() {
    let space = StateSpace::new(inventory(3));
    let sil = space.inventory().silence_label();
    let truth = vec![sil; 5];
    let scorer = synthetic_scorer(
        &space,
        &truth,
        SyntheticConfig {
            peak: 0.6,
            jitter: 1.0,
            seed: 4,
        },
    )
    .unwrap();
    let back = decode_posteriors(&encode_posteriors(&scorer).unwrap()).unwrap();
    for (a, b) in scorer.frames().iter().zip(back.frames()) {
        for (x, y) in a.left.iter().chain(&a.center).chain(&a.right).zip(b.left.iter().chain(&b.center).chain(&b.right)) {
            assert!((x - y).abs() <= 1e-7);
        }
    }
}
