use crate::am::{batch_score_frame, AcousticScales, ContextPriors, FactoredScorer, ScoreCache, ScoringMode};
use crate::error::{Error, Result};
use crate::inventory::{PhonemeInventory, TriphoneLabel};

use super::{FeatureSequence, MonophoneGaussians};

/// Per-frame emission log scores for a set of labels.
pub trait EmissionSource {
    fn num_frames(&self) -> usize;
    fn frame_scores(&self, frame: usize, labels: &[TriphoneLabel]) -> Result<Vec<f64>>;
}

pub struct GaussianEmissions<'a> {
    pub model: &'a MonophoneGaussians,
    pub inventory: &'a PhonemeInventory,
    pub features: &'a FeatureSequence,
}

impl EmissionSource for GaussianEmissions<'_> {
    fn num_frames(&self) -> usize {
        self.features.len()
    }

    fn frame_scores(&self, frame: usize, labels: &[TriphoneLabel]) -> Result<Vec<f64>> {
        if self.features.dim() != self.model.dim {
            return Err(Error::Dimension(format!(
                "features have {} dims, model has {}",
                self.features.dim(),
                self.model.dim
            )));
        }
        let x = self.features.frame(frame);
        Ok(labels
            .iter()
            .map(|l| self.model.state(self.inventory, l.center).log_density(x))
            .collect())
    }
}

/// Scaled factored hybrid scores, computed through the same batched path as
/// the decoder.
pub struct FactoredEmissions<'a> {
    pub scorer: &'a dyn FactoredScorer,
    pub priors: &'a ContextPriors,
    pub scales: AcousticScales,
    pub inventory: &'a PhonemeInventory,
    pub mode: ScoringMode,
}

impl EmissionSource for FactoredEmissions<'_> {
    fn num_frames(&self) -> usize {
        self.scorer.num_frames()
    }

    fn frame_scores(&self, frame: usize, labels: &[TriphoneLabel]) -> Result<Vec<f64>> {
        let mut cache = ScoreCache::new();
        batch_score_frame(self.scorer, &mut cache, frame, labels, self.priors, &self.scales, self.inventory, self.mode)
    }
}
