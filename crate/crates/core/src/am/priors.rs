//! Context-dependent prior estimation for the denominators of the factored
//! emission score.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::align::Alignment;
use crate::error::{Error, Result};
use crate::inventory::{ContextId, StateSpace, TriphoneLabel};

use super::posteriors::{joint_tables, normalize_or_uniform};

pub const DEFAULT_PRIOR_FLOOR: f64 = 1e-8;

const MAGIC_LINE: &str = "fhmm-priors 1";

/// p(left), p(center | left) and p(right | left, center), stored as natural
/// log-probabilities over the dense context and center indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextPriors {
    contexts: usize,
    centers: usize,
    floor: f64,
    log_left: Vec<f64>,
    log_center: Vec<f64>,
    log_right: Vec<f64>,
    log_center_marginal: Vec<f64>,
}

impl ContextPriors {
    fn from_tables(contexts: usize, centers: usize, floor: f64, left: Vec<f64>, center: Vec<f64>, right: Vec<f64>) -> Self {
        let ln = |v: Vec<f64>| v.into_iter().map(f64::ln).collect::<Vec<_>>();
        let mut priors = Self {
            contexts,
            centers,
            floor,
            log_left: ln(left),
            log_center: ln(center),
            log_right: ln(right),
            log_center_marginal: Vec::new(),
        };
        priors.log_center_marginal = priors.compute_center_marginal();
        priors
    }

    fn compute_center_marginal(&self) -> Vec<f64> {
        (0..self.centers)
            .map(|c| {
                let mut total = 0.0;
                for l in 0..self.contexts {
                    total += self.log_left[l].exp() * self.log_center[l * self.centers + c].exp();
                }
                total.ln()
            })
            .collect()
    }

    /// Exact marginals of a joint prior over the state space.
    pub fn from_joint(space: &StateSpace, joint: &[f64]) -> Result<Self> {
        let (pl, plc, plcr) = joint_tables(space, joint)?;
        Ok(Self::from_counts(space, &pl, &plc, &plcr, 0.0))
    }

    fn from_counts(space: &StateSpace, pl: &[f64], plc: &[f64], plcr: &[f64], floor: f64) -> Self {
        let c = space.num_contexts();
        let k = space.num_centers();
        let left = floor_distribution(&normalize_or_uniform(pl), floor);
        let mut center = Vec::with_capacity(c * k);
        for row in plc.chunks(k) {
            center.extend(floor_distribution(&normalize_or_uniform(row), floor));
        }
        let mut right = Vec::with_capacity(c * k * c);
        for row in plcr.chunks(c) {
            right.extend(floor_distribution(&normalize_or_uniform(row), floor));
        }
        Self::from_tables(c, k, floor, left, center, right)
    }

    pub fn uniform(space: &StateSpace) -> Self {
        let c = space.num_contexts();
        let k = space.num_centers();
        Self::from_tables(
            c,
            k,
            0.0,
            vec![1.0 / c as f64; c],
            vec![1.0 / k as f64; c * k],
            vec![1.0 / c as f64; c * k * c],
        )
    }

    pub fn num_contexts(&self) -> usize {
        self.contexts
    }

    pub fn num_centers(&self) -> usize {
        self.centers
    }

    pub fn smoothing_floor(&self) -> f64 {
        self.floor
    }

    pub fn log_left(&self, left: ContextId) -> Option<f64> {
        self.log_left.get(left.0).copied()
    }

    pub fn log_center(&self, left: ContextId, center: usize) -> Option<f64> {
        (left.0 < self.contexts && center < self.centers).then(|| self.log_center[left.0 * self.centers + center])
    }

    pub fn log_right(&self, left: ContextId, center: usize, right: ContextId) -> Option<f64> {
        (left.0 < self.contexts && center < self.centers && right.0 < self.contexts)
            .then(|| self.log_right[(left.0 * self.centers + center) * self.contexts + right.0])
    }

    /// log p(center), with p(center) = sum over left of p(left) p(center | left).
    pub fn log_center_marginal(&self, center: usize) -> Option<f64> {
        self.log_center_marginal.get(center).copied()
    }

    /// Every stored distribution, in probability space, for invariant checks.
    pub fn distributions(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        let exp = |row: &[f64]| row.iter().map(|x| x.exp()).collect::<Vec<_>>();
        std::iter::once(exp(&self.log_left))
            .chain(self.log_center.chunks(self.centers).map(exp))
            .chain(self.log_right.chunks(self.contexts).map(exp))
    }

    pub fn to_text(&self, space: &StateSpace) -> String {
        let inv = space.inventory();
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC_LINE}");
        let _ = writeln!(out, "floor\t{:.16e}", self.floor);
        out.push_str("[left]\n");
        for l in 0..self.contexts {
            let _ = writeln!(out, "{}\t{:.16e}", inv.context_symbol(ContextId(l)), self.log_left[l]);
        }
        out.push_str("[center|left]\n");
        for l in 0..self.contexts {
            for c in 0..self.centers {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{:.16e}",
                    inv.context_symbol(ContextId(l)),
                    inv.center_symbol(inv.center_from_index(c)),
                    self.log_center[l * self.centers + c]
                );
            }
        }
        out.push_str("[right|left,center]\n");
        for l in 0..self.contexts {
            for c in 0..self.centers {
                for r in 0..self.contexts {
                    let _ = writeln!(
                        out,
                        "{}\t{}\t{}\t{:.16e}",
                        inv.context_symbol(ContextId(l)),
                        inv.center_symbol(inv.center_from_index(c)),
                        inv.context_symbol(ContextId(r)),
                        self.log_right[(l * self.centers + c) * self.contexts + r]
                    );
                }
            }
        }
        out
    }

    pub fn parse(space: &StateSpace, text: &str) -> Result<Self> {
        let inv = space.inventory();
        let c = space.num_contexts();
        let k = space.num_centers();
        let err = |line: usize, reason: String| Error::Parse {
            what: "priors",
            line,
            reason,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        match lines.next() {
            Some((_, MAGIC_LINE)) => {}
            _ => return Err(err(1, format!("expected `{MAGIC_LINE}`"))),
        }
        let mut floor = None;
        let mut left = vec![f64::NAN; c];
        let mut center = vec![f64::NAN; c * k];
        let mut right = vec![f64::NAN; c * k * c];
        let mut section = "";
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                section = match line {
                    "[left]" | "[center|left]" | "[right|left,center]" => line,
                    _ => return Err(err(n, format!("unknown section {line}"))),
                };
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let ctx = |s: &str| inv.parse_context(s).ok_or_else(|| err(n, format!("unknown context `{s}`")));
            let cen = |s: &str| {
                inv.parse_center(s)
                    .map(|cs| inv.center_index(cs))
                    .ok_or_else(|| err(n, format!("unknown center `{s}`")))
            };
            let val = |s: &str| s.parse::<f64>().map_err(|e| err(n, format!("bad number `{s}`: {e}")));
            match (section, fields.as_slice()) {
                ("", ["floor", v]) => floor = Some(val(v)?),
                ("[left]", [l, v]) => left[ctx(l)?.0] = val(v)?,
                ("[center|left]", [l, cc, v]) => center[ctx(l)?.0 * k + cen(cc)?] = val(v)?,
                ("[right|left,center]", [l, cc, r, v]) => {
                    right[(ctx(l)?.0 * k + cen(cc)?) * c + ctx(r)?.0] = val(v)?
                }
                _ => return Err(err(n, format!("unexpected line `{line}`"))),
            }
        }
        let floor = floor.ok_or_else(|| err(2, "missing floor".into()))?;
        if let Some(i) = left.iter().position(|x| x.is_nan()) {
            return Err(Error::MissingPrior(format!("left {}", inv.context_symbol(ContextId(i)))));
        }
        if let Some(i) = center.iter().position(|x| x.is_nan()) {
            return Err(Error::MissingPrior(format!("center row {i}")));
        }
        if let Some(i) = right.iter().position(|x| x.is_nan()) {
            return Err(Error::MissingPrior(format!("right row {i}")));
        }
        let mut priors = Self {
            contexts: c,
            centers: k,
            floor,
            log_left: left,
            log_center: center,
            log_right: right,
            log_center_marginal: Vec::new(),
        };
        priors.log_center_marginal = priors.compute_center_marginal();
        Ok(priors)
    }

    pub fn load(space: &StateSpace, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(space, &text)
    }

    pub fn save(&self, space: &StateSpace, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text(space)).map_err(|e| Error::io(path, e))
    }
}

/// Raises entries below `floor` to the floor and rescales the rest so the
/// row still sums to one. Entries pushed under the floor by the rescaling
/// are floored in turn until none remain.
pub fn floor_distribution(probs: &[f64], floor: f64) -> Vec<f64> {
    let n = probs.len();
    if floor <= 0.0 || n == 0 {
        return probs.to_vec();
    }
    let floor = floor.min(1.0 / n as f64);
    let mut floored = vec![false; n];
    loop {
        let fixed = floored.iter().filter(|&&f| f).count();
        let free_mass: f64 = probs.iter().zip(&floored).filter(|(_, &f)| !f).map(|(p, _)| p).sum();
        let target = 1.0 - fixed as f64 * floor;
        let scale = if free_mass > 0.0 { target / free_mass } else { 0.0 };
        let mut changed = false;
        for i in 0..n {
            if !floored[i] && probs[i] * scale < floor {
                floored[i] = true;
                changed = true;
            }
        }
        if !changed {
            return probs
                .iter()
                .zip(&floored)
                .map(|(&p, &f)| if f { floor } else { p * scale })
                .collect();
        }
    }
}

/// Relative-frequency priors over a set of frame label sequences.
pub fn estimate_priors_from_labels<'a, I>(space: &StateSpace, sequences: I, floor: f64) -> Result<ContextPriors>
where
    I: IntoIterator<Item = &'a [TriphoneLabel]>,
{
    let mut counts = vec![0.0; space.len()];
    let mut frames = 0usize;
    for seq in sequences {
        for label in seq {
            let i = space
                .index_of(label)
                .ok_or_else(|| Error::Dimension(format!("label {label:?} outside state space")))?;
            counts[i] += 1.0;
            frames += 1;
        }
    }
    if frames == 0 {
        return Err(Error::EmptyCorpus);
    }
    let (pl, plc, plcr) = joint_tables(space, &counts)?;
    Ok(ContextPriors::from_counts(space, &pl, &plc, &plcr, floor))
}

pub fn estimate_priors(space: &StateSpace, alignments: &[Alignment], floor: f64) -> Result<ContextPriors> {
    estimate_priors_from_labels(space, alignments.iter().map(|a| a.labels.as_slice()), floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::{CenterState, PhonemeInventory};
    use proptest::prelude::*;

    fn space() -> StateSpace {
        StateSpace::new(PhonemeInventory::parse("sil\na\nb\nc\n").unwrap())
    }

    fn label(space: &StateSpace, l: &str, c: &str, r: &str) -> TriphoneLabel {
        let inv = space.inventory();
        TriphoneLabel {
            left: inv.parse_context(l).unwrap(),
            center: inv.parse_center(c).unwrap(),
            right: inv.parse_context(r).unwrap(),
        }
    }

    #[test]
    fn toy_counts() {
        let space = space();
        let inv = space.inventory();
        let x = label(&space, "a", "b.0", "c");
        let y = label(&space, "a", "b.1", "c");
        let frames = vec![x, x, x, y];
        let priors = estimate_priors_from_labels(&space, [frames.as_slice()], 0.0).unwrap();
        let a = inv.parse_context("a").unwrap();
        let b0 = inv.center_index(x.center);
        assert_eq!(priors.log_left(a).unwrap().exp(), 1.0);
        assert!((priors.log_center(a, b0).unwrap().exp() - 0.75).abs() < 1e-15);
        assert_eq!(priors.log_right(a, b0, x.right).unwrap().exp(), 1.0);
    }

    #[test]
    fn silence_only_corpus() {
        let space = space();
        let inv = space.inventory();
        let frames = vec![inv.silence_label(); 5];
        let priors = estimate_priors_from_labels(&space, [frames.as_slice()], 0.0).unwrap();
        let b = inv.boundary();
        assert_eq!(priors.log_left(b).unwrap().exp(), 1.0);
        assert_eq!(priors.log_center(b, inv.center_index(CenterState::Silence)).unwrap().exp(), 1.0);
    }

    #[test]
    fn one_frame_per_label_is_uniform_within_phone_conditions() {
        let space = space();
        let inv = space.inventory();
        let frames: Vec<_> = space.labels().collect();
        let priors = estimate_priors_from_labels(&space, [frames.as_slice()], 0.0).unwrap();
        let c = space.num_contexts();
        let k = space.num_centers();
        let sil = inv.center_index(CenterState::Silence);
        for l in 0..c {
            for ci in 0..sil {
                for r in 0..c {
                    let p = priors.log_right(ContextId(l), ci, ContextId(r)).unwrap().exp();
                    assert!((p - 1.0 / c as f64).abs() < 1e-15);
                }
            }
        }
        // Phoneme lefts: uniform over the phone centers, silence never follows.
        for l in 0..c - 1 {
            for ci in 0..sil {
                let p = priors.log_center(ContextId(l), ci).unwrap().exp();
                assert!((p - 1.0 / (k - 1) as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn empty_corpus_is_error() {
        let empty: Vec<TriphoneLabel> = Vec::new();
        assert!(matches!(
            estimate_priors_from_labels(&space(), [empty.as_slice()], 0.0),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn floor_keeps_every_entry_at_or_above_floor() {
        let d = floor_distribution(&[0.999_999, 1e-9, 1e-7, 0.0], 1e-6);
        assert!(d.iter().all(|&p| p >= 1e-6));
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let space = space();
        let frames: Vec<_> = space.labels().step_by(3).collect();
        let priors = estimate_priors_from_labels(&space, [frames.as_slice()], DEFAULT_PRIOR_FLOOR).unwrap();
        let text = priors.to_text(&space);
        let back = ContextPriors::parse(&space, &text).unwrap();
        assert_eq!(back, priors);
        assert_eq!(back.to_text(&space), text);
    }

    #[test]
    fn parse_rejects_missing_rows() {
        let space = space();
        let text = ContextPriors::uniform(&space).to_text(&space);
        let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(ContextPriors::parse(&space, &truncated), Err(Error::MissingPrior(_))));
    }

    proptest! {
        #[test]
        fn floored_priors_normalize(seed in 0u64..1000, floor in prop_oneof![Just(0.0), Just(1e-8), Just(1e-3)]) {
            use rand::{Rng, SeedableRng};
            let space = space();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let frames: Vec<_> = (0..40).map(|_| space.label_at(rng.random_range(0..space.len())).unwrap()).collect();
            let priors = estimate_priors_from_labels(&space, [frames.as_slice()], floor).unwrap();
            for dist in priors.distributions() {
                prop_assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                if floor > 0.0 {
                    prop_assert!(dist.iter().all(|&p| p >= floor * (1.0 - 1e-12)));
                }
            }
        }
    }
}
