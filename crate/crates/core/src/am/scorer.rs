//! Sources of per-frame factored posteriors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::align::FeatureSequence;
use crate::error::{Error, Result};
use crate::inventory::{ContextId, StateSpace, TriphoneLabel};

use super::posteriors::FactoredFramePosteriors;

/// Conditions requested from a scorer for one frame. The left posterior
/// vector is always returned.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConditionBatch {
    /// Left contexts whose center distribution is needed.
    pub lefts: Vec<ContextId>,
    /// (left, center index) pairs whose right distribution is needed.
    pub pairs: Vec<(ContextId, usize)>,
}

impl ConditionBatch {
    pub fn len(&self) -> usize {
        self.lefts.len() + self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lefts.is_empty() && self.pairs.is_empty()
    }
}

/// Answer to a [`ConditionBatch`], aligned with its request order.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalScores {
    pub left: Vec<f64>,
    pub center: Vec<Vec<f64>>,
    pub right: Vec<Vec<f64>>,
}

/// Pure function of (frame, condition) standing in for the acoustic network.
pub trait FactoredScorer: Send + Sync {
    fn num_frames(&self) -> usize;
    fn num_contexts(&self) -> usize;
    fn num_centers(&self) -> usize;

    fn score(&self, frame: usize, batch: &ConditionBatch) -> Result<ConditionalScores>;

    /// Every condition of one frame.
    fn frame_posteriors(&self, frame: usize) -> Result<FactoredFramePosteriors> {
        let (c, k) = (self.num_contexts(), self.num_centers());
        let batch = ConditionBatch {
            lefts: (0..c).map(ContextId).collect(),
            pairs: (0..c).flat_map(|l| (0..k).map(move |ci| (ContextId(l), ci))).collect(),
        };
        let s = self.score(frame, &batch)?;
        FactoredFramePosteriors::new(c, k, s.left, s.center.concat(), s.right.concat())
    }
}

fn check_frame(frame: usize, frames: usize) -> Result<()> {
    if frame >= frames {
        return Err(Error::Dimension(format!("frame {frame} out of range 0..{frames}")));
    }
    Ok(())
}

fn extract(post: &FactoredFramePosteriors, batch: &ConditionBatch) -> Result<ConditionalScores> {
    let c = post.left.len();
    let k = post.num_centers();
    for &l in &batch.lefts {
        if l.0 >= c {
            return Err(Error::Dimension(format!("left context {} out of range", l.0)));
        }
    }
    for &(l, ci) in &batch.pairs {
        if l.0 >= c || ci >= k {
            return Err(Error::Dimension(format!("condition ({}, {ci}) out of range", l.0)));
        }
    }
    Ok(ConditionalScores {
        left: post.left.clone(),
        center: batch.lefts.iter().map(|&l| post.center_row(l).to_vec()).collect(),
        right: batch.pairs.iter().map(|&(l, ci)| post.right_row(l, ci).to_vec()).collect(),
    })
}

/// Replays stored dense posteriors.
#[derive(Clone, Debug, PartialEq)]
pub struct TableScorer {
    contexts: usize,
    centers: usize,
    frames: Vec<FactoredFramePosteriors>,
}

impl TableScorer {
    pub fn new(contexts: usize, centers: usize, frames: Vec<FactoredFramePosteriors>) -> Result<Self> {
        for (t, f) in frames.iter().enumerate() {
            if f.left.len() != contexts || f.num_centers() != centers {
                return Err(Error::Dimension(format!("frame {t} has mismatched dimensions")));
            }
        }
        Ok(Self {
            contexts,
            centers,
            frames,
        })
    }

    /// Checks non-negativity and normalization of every frame.
    pub fn validate(&self, tolerance: f64) -> Result<()> {
        for (t, f) in self.frames.iter().enumerate() {
            if f.has_negative() {
                return Err(Error::BadDistribution {
                    frame: t,
                    reason: "negative or NaN entry".into(),
                });
            }
            let err = f.max_normalization_error();
            if !(err <= tolerance) {
                return Err(Error::BadDistribution {
                    frame: t,
                    reason: format!("distribution sums differ from 1 by {err:e}"),
                });
            }
        }
        Ok(())
    }

    pub fn frames(&self) -> &[FactoredFramePosteriors] {
        &self.frames
    }
}

impl FactoredScorer for TableScorer {
    fn num_frames(&self) -> usize {
        self.frames.len()
    }

    fn num_contexts(&self) -> usize {
        self.contexts
    }

    fn num_centers(&self) -> usize {
        self.centers
    }

    fn score(&self, frame: usize, batch: &ConditionBatch) -> Result<ConditionalScores> {
        check_frame(frame, self.frames.len())?;
        extract(&self.frames[frame], batch)
    }

    fn frame_posteriors(&self, frame: usize) -> Result<FactoredFramePosteriors> {
        check_frame(frame, self.frames.len())?;
        Ok(self.frames[frame].clone())
    }
}

/// Configuration of the synthetic posterior generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticConfig {
    /// Mass placed on the true factor value.
    pub peak: f64,
    /// Zero spreads the remainder uniformly; larger values perturb its split.
    pub jitter: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn peaked(peak: f64) -> Self {
        Self {
            peak,
            jitter: 0.0,
            seed: 0,
        }
    }
}

fn peaked_row(n: usize, truth: usize, peak: f64, jitter: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let rest = 1.0 - peak;
    let weights: Vec<f64> = (0..n)
        .map(|i| if i == truth { 0.0 } else { 1.0 + jitter * rng.random::<f64>() })
        .collect();
    let total: f64 = weights.iter().sum();
    weights
        .iter()
        .enumerate()
        .map(|(i, w)| if i == truth { peak } else { rest * w / total })
        .collect()
}

/// Posteriors that put `peak` on the true value of every factor, under every
/// condition, for a known frame-level truth.
pub fn synthetic_scorer(space: &StateSpace, truth: &[TriphoneLabel], config: SyntheticConfig) -> Result<TableScorer> {
    if !(0.0..=1.0).contains(&config.peak) {
        return Err(Error::Config(format!("peak {} outside [0, 1]", config.peak)));
    }
    let inv = space.inventory();
    let c = space.num_contexts();
    let k = space.num_centers();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let frames = truth
        .iter()
        .map(|label| {
            if !inv.is_valid_label(label) {
                return Err(Error::Dimension(format!("invalid truth label {label:?}")));
            }
            let ci = inv.center_index(label.center);
            let left = peaked_row(c, label.left.0, config.peak, config.jitter, &mut rng);
            let mut center = Vec::with_capacity(c * k);
            for _ in 0..c {
                center.extend(peaked_row(k, ci, config.peak, config.jitter, &mut rng));
            }
            let mut right = Vec::with_capacity(c * k * c);
            for _ in 0..c * k {
                right.extend(peaked_row(c, label.right.0, config.peak, config.jitter, &mut rng));
            }
            FactoredFramePosteriors::new(c, k, left, center, right)
        })
        .collect::<Result<Vec<_>>>()?;
    TableScorer::new(c, k, frames)
}

/// Diagonal Gaussian per triphone label plus a joint label prior.
#[derive(Clone, Debug)]
pub struct TriphoneGaussians {
    pub dim: usize,
    /// Indexed by dense label index.
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub label_prior: Vec<f64>,
}

impl TriphoneGaussians {
    fn log_joint(&self, frame: &[f64]) -> Vec<f64> {
        self.means
            .iter()
            .zip(&self.variances)
            .zip(&self.label_prior)
            .map(|((mean, var), &prior)| {
                if prior <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let mut ll = prior.ln();
                for ((&x, &m), &v) in frame.iter().zip(mean).zip(var) {
                    ll -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m) * (x - m) / v);
                }
                ll
            })
            .collect()
    }
}

/// Exact Bayesian posteriors of a Gaussian label model, factored by the
/// chain rule into the three conditionals.
#[derive(Clone, Debug)]
pub struct GaussianScorer {
    space: StateSpace,
    model: TriphoneGaussians,
    features: FeatureSequence,
}

impl GaussianScorer {
    pub fn new(space: StateSpace, model: TriphoneGaussians, features: FeatureSequence) -> Result<Self> {
        let n = space.len();
        if model.means.len() != n || model.variances.len() != n || model.label_prior.len() != n {
            return Err(Error::Dimension(format!("Gaussian model must cover all {n} labels")));
        }
        if features.dim() != model.dim {
            return Err(Error::Dimension(format!(
                "features have dimension {}, model {}",
                features.dim(),
                model.dim
            )));
        }
        Ok(Self { space, model, features })
    }

    /// Joint posterior over the dense label index.
    pub fn joint_posterior(&self, frame: usize) -> Result<Vec<f64>> {
        check_frame(frame, self.features.len())?;
        let logs = self.model.log_joint(self.features.frame(frame));
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        Ok(weights.into_iter().map(|w| w / total).collect())
    }
}

impl FactoredScorer for GaussianScorer {
    fn num_frames(&self) -> usize {
        self.features.len()
    }

    fn num_contexts(&self) -> usize {
        self.space.num_contexts()
    }

    fn num_centers(&self) -> usize {
        self.space.num_centers()
    }

    fn score(&self, frame: usize, batch: &ConditionBatch) -> Result<ConditionalScores> {
        let post = FactoredFramePosteriors::from_joint(&self.space, &self.joint_posterior(frame)?)?;
        extract(&post, batch)
    }
}
