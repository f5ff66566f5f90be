use crate::error::{Error, Result};
use crate::inventory::{ContextId, StateSpace};

/// Read access to the three factored posteriors of one frame.
///
/// Centers are addressed by their dense index. `None` means the condition
/// was never scored.
pub trait FactorLookup {
    fn num_contexts(&self) -> usize;

    /// p(left | x)
    fn left(&self, left: ContextId) -> Option<f64>;

    /// p(center | left, x)
    fn center(&self, left: ContextId, center: usize) -> Option<f64>;

    /// p(right | left, center, x)
    fn right(&self, left: ContextId, center: usize, right: ContextId) -> Option<f64>;

    /// p(center | x) = sum over left of p(left | x) p(center | left, x),
    /// summed in context order.
    fn center_marginal(&self, center: usize) -> Option<f64> {
        let mut total = 0.0;
        for l in 0..self.num_contexts() {
            let l = ContextId(l);
            total += self.left(l)? * self.center(l, center)?;
        }
        Some(total)
    }
}

/// Dense posteriors for one frame over every condition, in the same layout
/// as the posterior dump: left (C), then center given each left (C x K),
/// then right given each (left, center) (C x K x C).
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredFramePosteriors {
    contexts: usize,
    centers: usize,
    pub left: Vec<f64>,
    pub center: Vec<f64>,
    pub right: Vec<f64>,
}

impl FactoredFramePosteriors {
    pub fn new(contexts: usize, centers: usize, left: Vec<f64>, center: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if left.len() != contexts || center.len() != contexts * centers || right.len() != contexts * centers * contexts {
            return Err(Error::Dimension(format!(
                "posterior table sizes {}/{}/{} do not match C={contexts}, K={centers}",
                left.len(),
                center.len(),
                right.len()
            )));
        }
        Ok(Self {
            contexts,
            centers,
            left,
            center,
            right,
        })
    }

    pub fn uniform(contexts: usize, centers: usize) -> Self {
        let c = 1.0 / contexts as f64;
        let k = 1.0 / centers as f64;
        Self {
            contexts,
            centers,
            left: vec![c; contexts],
            center: vec![k; contexts * centers],
            right: vec![c; contexts * centers * contexts],
        }
    }

    pub fn num_centers(&self) -> usize {
        self.centers
    }

    pub fn center_row(&self, left: ContextId) -> &[f64] {
        let k = self.centers;
        &self.center[left.0 * k..(left.0 + 1) * k]
    }

    pub fn right_row(&self, left: ContextId, center: usize) -> &[f64] {
        let c = self.contexts;
        let start = (left.0 * self.centers + center) * c;
        &self.right[start..start + c]
    }

    /// Factors a joint distribution over the state space (indexed densely)
    /// into the three conditionals. Conditions with zero mass get uniform
    /// distributions.
    pub fn from_joint(space: &StateSpace, joint: &[f64]) -> Result<Self> {
        let (pl, plc, plcr) = joint_tables(space, joint)?;
        let c = space.num_contexts();
        let k = space.num_centers();
        let left = normalize_or_uniform(&pl);
        let mut center = Vec::with_capacity(c * k);
        for l in 0..c {
            center.extend(normalize_or_uniform(&plc[l * k..(l + 1) * k]));
        }
        let mut right = Vec::with_capacity(c * k * c);
        for lc in 0..c * k {
            right.extend(normalize_or_uniform(&plcr[lc * c..(lc + 1) * c]));
        }
        Self::new(c, k, left, center, right)
    }

    /// Maximum deviation of any stored distribution from summing to one.
    pub fn max_normalization_error(&self) -> f64 {
        let c = self.contexts;
        let k = self.centers;
        let mut worst = (self.left.iter().sum::<f64>() - 1.0).abs();
        for row in self.center.chunks(k).chain(self.right.chunks(c)) {
            worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
        }
        worst
    }

    pub fn has_negative(&self) -> bool {
        self.left
            .iter()
            .chain(&self.center)
            .chain(&self.right)
            .any(|&p| !(p >= 0.0))
    }
}

impl FactorLookup for FactoredFramePosteriors {
    fn num_contexts(&self) -> usize {
        self.contexts
    }

    fn left(&self, left: ContextId) -> Option<f64> {
        self.left.get(left.0).copied()
    }

    fn center(&self, left: ContextId, center: usize) -> Option<f64> {
        if left.0 >= self.contexts || center >= self.centers {
            return None;
        }
        Some(self.center[left.0 * self.centers + center])
    }

    fn right(&self, left: ContextId, center: usize, right: ContextId) -> Option<f64> {
        if left.0 >= self.contexts || center >= self.centers || right.0 >= self.contexts {
            return None;
        }
        Some(self.right[(left.0 * self.centers + center) * self.contexts + right.0])
    }
}

/// Marginal tables of a joint over the state space: p(l), p(l,c), p(l,c,r),
/// laid out like the factored tables.
pub(crate) fn joint_tables(space: &StateSpace, joint: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if joint.len() != space.len() {
        return Err(Error::Dimension(format!(
            "joint has {} entries, state space has {}",
            joint.len(),
            space.len()
        )));
    }
    let inv = space.inventory();
    let c = space.num_contexts();
    let k = space.num_centers();
    let mut pl = vec![0.0; c];
    let mut plc = vec![0.0; c * k];
    let mut plcr = vec![0.0; c * k * c];
    for (i, &q) in joint.iter().enumerate() {
        let label = space.label_at(i).expect("index in range");
        let ci = inv.center_index(label.center);
        pl[label.left.0] += q;
        plc[label.left.0 * k + ci] += q;
        plcr[(label.left.0 * k + ci) * c + label.right.0] += q;
    }
    Ok((pl, plc, plcr))
}

pub(crate) fn normalize_or_uniform(row: &[f64]) -> Vec<f64> {
    let total: f64 = row.iter().sum();
    if total > 0.0 {
        row.iter().map(|&x| x / total).collect()
    } else {
        vec![1.0 / row.len() as f64; row.len()]
    }
}
