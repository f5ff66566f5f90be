//! Overlapping chunking and seeded time/feature masking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_CHUNK_LEN: usize = 128;
pub const DEFAULT_OVERLAP: f64 = 0.5;

/// Half-open `(start, end)` windows. Starts advance by
/// `chunk_len * (1 - overlap)`; the last window is clipped at `len`, and
/// enumeration stops early once a window ends exactly at `len`.
pub fn chunk(len: usize, chunk_len: usize, overlap: f64) -> Result<Vec<(usize, usize)>> {
    if chunk_len == 0 || !(0.0..1.0).contains(&overlap) {
        return Err(Error::Config(format!("bad chunking: length {chunk_len}, overlap {overlap}")));
    }
    let stride = ((chunk_len as f64) * (1.0 - overlap)).round().max(1.0) as usize;
    let mut out = Vec::new();
    let mut start = 0;
    while start < len {
        let end = start + chunk_len;
        out.push((start, end.min(len)));
        if end == len {
            break;
        }
        start += stride;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaskParams {
    pub max_time_masks: usize,
    pub max_time_width: usize,
    pub max_feat_masks: usize,
    pub max_feat_width: usize,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self {
            max_time_masks: 2,
            max_time_width: 20,
            max_feat_masks: 1,
            max_feat_width: 8,
        }
    }
}

/// Drawn bands as `(start, width)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MaskBands {
    pub time: Vec<(usize, usize)>,
    pub feat: Vec<(usize, usize)>,
}

/// T x D boolean mask, row-major by frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub frames: usize,
    pub dim: usize,
    pub data: Vec<bool>,
    pub bands: MaskBands,
}

impl Mask {
    pub fn get(&self, t: usize, d: usize) -> bool {
        self.data[t * self.dim + d]
    }

    pub fn masked_count(&self) -> usize {
        self.data.iter().filter(|&&m| m).count()
    }
}

fn draw(rng: &mut ChaCha8Rng, extent: usize, max_width: usize) -> (usize, usize) {
    let width = rng.random_range(0..=max_width.min(extent));
    let start = rng.random_range(0..=extent - width);
    (start, width)
}

/// Each band draws its width uniformly from `0..=max` and then its start;
/// time bands first, then feature bands.
pub fn time_feature_mask(frames: usize, dim: usize, params: &MaskParams, seed: u64) -> Mask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bands = MaskBands::default();
    for _ in 0..params.max_time_masks {
        bands.time.push(draw(&mut rng, frames, params.max_time_width));
    }
    for _ in 0..params.max_feat_masks {
        bands.feat.push(draw(&mut rng, dim, params.max_feat_width));
    }
    let mut data = vec![false; frames * dim];
    for &(s, w) in &bands.time {
        for t in s..s + w {
            data[t * dim..(t + 1) * dim].fill(true);
        }
    }
    for &(s, w) in &bands.feat {
        for t in 0..frames {
            data[t * dim + s..t * dim + s + w].fill(true);
        }
    }
    Mask {
        frames,
        dim,
        data,
        bands,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_examples() {
        assert_eq!(chunk(128, 128, 0.5).unwrap(), vec![(0, 128)]);
        let c = chunk(300, 128, 0.5).unwrap();
        assert_eq!(c.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 64, 128, 192, 256]);
        assert_eq!(*c.last().unwrap(), (256, 300));
        assert_eq!(chunk(10, 128, 0.5).unwrap(), vec![(0, 10)]);
        assert!(chunk(0, 128, 0.5).unwrap().is_empty());
        assert!(chunk(10, 0, 0.5).is_err());
    }

    #[test]
    fn zero_params_mask_nothing() {
        let p = MaskParams {
            max_time_masks: 0,
            max_time_width: 0,
            max_feat_masks: 0,
            max_feat_width: 0,
        };
        assert_eq!(time_feature_mask(30, 5, &p, 1).masked_count(), 0);
        let p = MaskParams {
            max_time_masks: 3,
            max_feat_masks: 3,
            max_time_width: 0,
            max_feat_width: 0,
        };
        assert_eq!(time_feature_mask(30, 5, &p, 1).masked_count(), 0);
    }

    #[test]
    fn deterministic_per_seed() {
        let p = MaskParams::default();
        assert_eq!(time_feature_mask(100, 40, &p, 9), time_feature_mask(100, 40, &p, 9));
    }
}
