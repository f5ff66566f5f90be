//! Scaled log-linear acoustic scores: posterior over prior for the
//! triphone, diphone and monophone factorizations.
//!
//! Terms are always summed left to right in the order they are written
//! below, so any two callers holding the same numbers get bit-identical
//! results.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inventory::{CenterState, ContextId, PhonemeInventory, TriphoneLabel};

use super::posteriors::FactorLookup;
use super::priors::ContextPriors;

/// Prior scales for the left, center and right factors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcousticScales {
    pub gamma_left: f64,
    pub gamma_center: f64,
    pub gamma_right: f64,
}

impl Default for AcousticScales {
    fn default() -> Self {
        Self::uniform(1.0)
    }
}

impl AcousticScales {
    pub fn uniform(gamma: f64) -> Self {
        Self {
            gamma_left: gamma,
            gamma_center: gamma,
            gamma_right: gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_left", self.gamma_left),
            ("gamma_center", self.gamma_center),
            ("gamma_right", self.gamma_right),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a nonnegative real, got {v}")));
            }
        }
        Ok(())
    }
}

/// Which factorization the acoustic score uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ScoringMode {
    Mono,
    Di,
    #[default]
    Tri,
}

impl fmt::Display for ScoringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoringMode::Mono => "mono",
            ScoringMode::Di => "di",
            ScoringMode::Tri => "tri",
        })
    }
}

impl FromStr for ScoringMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mono" => Ok(ScoringMode::Mono),
            "di" => Ok(ScoringMode::Di),
            "tri" => Ok(ScoringMode::Tri),
            _ => Err(Error::Config(format!("unknown scoring mode `{s}` (mono|di|tri)"))),
        }
    }
}

fn missing(what: &str, index: impl fmt::Debug) -> Error {
    Error::MissingPrior(format!("{what} {index:?}"))
}

fn prior(value: Option<f64>, what: &str, index: impl fmt::Debug) -> Result<f64> {
    match value {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(missing(what, index)),
    }
}

fn posterior(value: Option<f64>, what: &str, index: impl fmt::Debug) -> Result<f64> {
    value
        .map(f64::ln)
        .ok_or_else(|| Error::Dimension(format!("posterior {what} {index:?} was not scored")))
}

/// log p(r|l,c,x) - g_r log p(r|l,c) + log p(c|l,x) - g_c log p(c|l)
/// + log p(l|x) - g_l log p(l)
pub fn combine_factored_score(
    post: &impl FactorLookup,
    priors: &ContextPriors,
    scales: &AcousticScales,
    inventory: &PhonemeInventory,
    label: &TriphoneLabel,
) -> Result<f64> {
    let (l, r) = (label.left, label.right);
    let c = inventory.center_index(label.center);
    let post_r = posterior(post.right(l, c, r), "right", (l, c, r))?;
    let prior_r = prior(priors.log_right(l, c, r), "right", (l, c, r))?;
    let post_c = posterior(post.center(l, c), "center", (l, c))?;
    let prior_c = prior(priors.log_center(l, c), "center", (l, c))?;
    let post_l = posterior(post.left(l), "left", l)?;
    let prior_l = prior(priors.log_left(l), "left", l)?;
    Ok(post_r - scales.gamma_right * prior_r + post_c - scales.gamma_center * prior_c + post_l
        - scales.gamma_left * prior_l)
}

/// log p(c|l,x) - g_c log p(c|l) + log p(l|x) - g_l log p(l)
pub fn combine_diphone_score(
    post: &impl FactorLookup,
    priors: &ContextPriors,
    scales: &AcousticScales,
    inventory: &PhonemeInventory,
    left: ContextId,
    center: CenterState,
) -> Result<f64> {
    let c = inventory.center_index(center);
    let post_c = posterior(post.center(left, c), "center", (left, c))?;
    let prior_c = prior(priors.log_center(left, c), "center", (left, c))?;
    let post_l = posterior(post.left(left), "left", left)?;
    let prior_l = prior(priors.log_left(left), "left", left)?;
    Ok(post_c - scales.gamma_center * prior_c + post_l - scales.gamma_left * prior_l)
}

/// log p(c|x) - g log p(c), both marginalized over the left context.
pub fn combine_monophone_score(
    post: &impl FactorLookup,
    priors: &ContextPriors,
    scale: f64,
    inventory: &PhonemeInventory,
    center: CenterState,
) -> Result<f64> {
    let c = inventory.center_index(center);
    let post_c = posterior(post.center_marginal(c), "center marginal", c)?;
    let prior_c = prior(priors.log_center_marginal(c), "center marginal", c)?;
    Ok(post_c - scale * prior_c)
}

/// Mode dispatch used by the decoder, the aligner and the oracle alike.
pub fn score_label(
    mode: ScoringMode,
    post: &impl FactorLookup,
    priors: &ContextPriors,
    scales: &AcousticScales,
    inventory: &PhonemeInventory,
    label: &TriphoneLabel,
) -> Result<f64> {
    match mode {
        ScoringMode::Tri => combine_factored_score(post, priors, scales, inventory, label),
        ScoringMode::Di => combine_diphone_score(post, priors, scales, inventory, label.left, label.center),
        ScoringMode::Mono => combine_monophone_score(post, priors, scales.gamma_center, inventory, label.center),
    }
}
