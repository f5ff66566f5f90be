//! Label-smoothed training targets and their binary file format.

use std::fs;
use std::path::Path;

use crate::align::Alignment;
use crate::error::{Error, Result};
use crate::inventory::PhonemeInventory;

pub const TARGETS_MAGIC: &[u8; 4] = b"FHTG";
pub const TARGETS_VERSION: u32 = 1;

/// Smoothing mass and which of the three outputs receive it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LSPolicy {
    pub epsilon: f64,
    pub left: bool,
    pub center: bool,
    pub right: bool,
}

impl Default for LSPolicy {
    /// Smoothed contexts, hard center.
    fn default() -> Self {
        Self {
            epsilon: 0.2,
            left: true,
            center: false,
            right: true,
        }
    }
}

impl LSPolicy {
    pub fn none() -> Self {
        Self {
            epsilon: 0.0,
            left: false,
            center: false,
            right: false,
        }
    }
}

/// Per frame: left, center and right target distributions, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftTargets {
    pub contexts: usize,
    pub centers: usize,
    pub left: Vec<f64>,
    pub center: Vec<f64>,
    pub right: Vec<f64>,
}

impl SoftTargets {
    pub fn len(&self) -> usize {
        self.left.len() / self.contexts
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn left_row(&self, t: usize) -> &[f64] {
        &self.left[t * self.contexts..(t + 1) * self.contexts]
    }

    pub fn center_row(&self, t: usize) -> &[f64] {
        &self.center[t * self.centers..(t + 1) * self.centers]
    }

    pub fn right_row(&self, t: usize) -> &[f64] {
        &self.right[t * self.contexts..(t + 1) * self.contexts]
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = TARGETS_MAGIC.to_vec();
        for v in [TARGETS_VERSION, self.len() as u32, self.contexts as u32, self.centers as u32, self.contexts as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for t in 0..self.len() {
            for &x in self.left_row(t).iter().chain(self.center_row(t)).chain(self.right_row(t)) {
                out.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = |offset: usize, reason: &str| Error::Binary {
            what: "targets file",
            offset,
            reason: reason.to_string(),
        };
        if bytes.len() < 24 {
            return Err(bad(bytes.len(), "truncated header"));
        }
        if &bytes[..4] != TARGETS_MAGIC {
            return Err(bad(0, "bad magic, expected FHTG"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        if word(4) != TARGETS_VERSION as usize {
            return Err(bad(4, "unsupported version"));
        }
        let (t, c, k, r) = (word(8), word(12), word(16), word(20));
        if c != r || c == 0 || k == 0 {
            return Err(bad(12, "left and right dimensions must match and be non-zero"));
        }
        let per = c + k + c;
        let expected = 24 + 4 * t * per;
        if bytes.len() != expected {
            return Err(bad(bytes.len().min(expected), "payload size does not match header"));
        }
        let vals: Vec<f64> = bytes[24..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        let mut out = SoftTargets {
            contexts: c,
            centers: k,
            left: Vec::with_capacity(t * c),
            center: Vec::with_capacity(t * k),
            right: Vec::with_capacity(t * c),
        };
        for frame in vals.chunks_exact(per) {
            out.left.extend_from_slice(&frame[..c]);
            out.center.extend_from_slice(&frame[c..c + k]);
            out.right.extend_from_slice(&frame[c + k..]);
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

fn push_row(out: &mut Vec<f64>, classes: usize, truth: usize, smooth: bool, epsilon: f64) {
    let (hit, miss) = if smooth { (1.0 - epsilon, epsilon / (classes - 1) as f64) } else { (1.0, 0.0) };
    out.extend((0..classes).map(|i| if i == truth { hit } else { miss }));
}

/// Interpolates each smoothed output toward the uniform distribution over
/// the other classes; the rest stay one-hot.
pub fn smooth_targets(inventory: &PhonemeInventory, alignment: &Alignment, policy: &LSPolicy) -> Result<SoftTargets> {
    if !(0.0..=1.0).contains(&policy.epsilon) {
        return Err(Error::Config(format!("smoothing mass must be in [0, 1], got {}", policy.epsilon)));
    }
    let c = inventory.num_contexts();
    let k = inventory.num_centers();
    if (policy.left || policy.right) && c == 1 {
        return Err(Error::Config("context smoothing needs at least two context classes".into()));
    }
    if policy.center && k == 1 {
        return Err(Error::Config("center smoothing needs at least two center classes".into()));
    }
    let t = alignment.labels.len();
    let mut out = SoftTargets {
        contexts: c,
        centers: k,
        left: Vec::with_capacity(t * c),
        center: Vec::with_capacity(t * k),
        right: Vec::with_capacity(t * c),
    };
    for label in &alignment.labels {
        push_row(&mut out.left, c, label.left.0, policy.left, policy.epsilon);
        push_row(&mut out.center, k, inventory.center_index(label.center), policy.center, policy.epsilon);
        push_row(&mut out.right, c, label.right.0, policy.right, policy.epsilon);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::{CenterState, ContextId, TriphoneLabel};

    fn setup() -> (PhonemeInventory, Alignment) {
        let inv = PhonemeInventory::parse("sil\na\nb\nc\nd\n").unwrap();
        let a = Alignment {
            utt: "u".into(),
            words: vec![],
            labels: vec![
                TriphoneLabel {
                    left: ContextId(0),
                    center: CenterState::phone(1, 2),
                    right: ContextId(3),
                },
                inv.silence_label(),
            ],
        };
        (inv, a)
    }

    #[test]
    fn five_classes() {
        let (inv, a) = setup();
        let all = LSPolicy {
            epsilon: 0.2,
            left: true,
            center: true,
            right: true,
        };
        let s = smooth_targets(&inv, &a, &all).unwrap();
        assert_eq!(s.left_row(0), &[0.8, 0.05, 0.05, 0.05, 0.05]);
        assert_eq!(s.right_row(1)[4], 0.8);
    }

    #[test]
    fn epsilon_zero_is_one_hot() {
        let (inv, a) = setup();
        let p = LSPolicy {
            epsilon: 0.0,
            ..LSPolicy::default()
        };
        let s = smooth_targets(&inv, &a, &p).unwrap();
        let h = smooth_targets(&inv, &a, &LSPolicy::none()).unwrap();
        assert_eq!(s, h);
    }

    #[test]
    fn single_class_smoothing_rejected() {
        let inv = PhonemeInventory::parse("sil\n").unwrap();
        let a = Alignment {
            utt: "u".into(),
            words: vec![],
            labels: vec![inv.silence_label()],
        };
        assert!(smooth_targets(&inv, &a, &LSPolicy::default()).is_err());
        assert!(smooth_targets(&inv, &a, &LSPolicy::none()).is_ok());
    }

    #[test]
    fn binary_round_trip() {
        let (inv, a) = setup();
        let s = smooth_targets(&inv, &a, &LSPolicy::default()).unwrap();
        let back = SoftTargets::decode(&s.encode()).unwrap();
        assert_eq!(back.len(), 2);
        for (x, y) in s.left.iter().chain(&s.center).zip(back.left.iter().chain(&back.center)) {
            assert!((x - y).abs() < 1e-7);
        }
        assert!(SoftTargets::decode(&s.encode()[..30]).is_err());
    }
}
