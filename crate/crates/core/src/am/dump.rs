//! Binary posterior dump: `FHPD`, version, T, P (u32 little-endian), then
//! per frame the left vector (C f32), the center vector for each left
//! (C x K f32) and the right vector for each (left, center) (C x K x C f32),
//! with C = P + 1 and K = 3P + 1.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::inventory::SUBSTATES;

use super::posteriors::FactoredFramePosteriors;
use super::scorer::{FactoredScorer, TableScorer};

pub const POSTERIOR_MAGIC: &[u8; 4] = b"FHPD";
pub const POSTERIOR_VERSION: u32 = 1;

/// Normalization tolerance applied when loading a dump.
pub const DUMP_TOLERANCE: f64 = 1e-4;

pub fn encode_posteriors(scorer: &dyn FactoredScorer) -> Result<Vec<u8>> {
    let c = scorer.num_contexts();
    let k = scorer.num_centers();
    let p = c - 1;
    if k != SUBSTATES * p + 1 {
        return Err(Error::Dimension(format!("C={c} and K={k} are not a phoneme inventory")));
    }
    let t = scorer.num_frames();
    let per_frame = c + c * k + c * k * c;
    let mut out = Vec::with_capacity(16 + t * per_frame * 4);
    out.extend_from_slice(POSTERIOR_MAGIC);
    for v in [POSTERIOR_VERSION, t as u32, p as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for frame in 0..t {
        let post = scorer.frame_posteriors(frame)?;
        for &x in post.left.iter().chain(&post.center).chain(&post.right) {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_posteriors(path: impl AsRef<Path>, scorer: &dyn FactoredScorer) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_posteriors(scorer)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Binary {
                what: "posterior dump",
                offset: self.pos,
                reason: format!("truncated while reading {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        Ok(self
            .take(4 * n, what)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect())
    }
}

pub fn decode_posteriors(bytes: &[u8]) -> Result<TableScorer> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != POSTERIOR_MAGIC {
        return Err(Error::Binary {
            what: "posterior dump",
            offset: 0,
            reason: "bad magic, expected FHPD".into(),
        });
    }
    let version = r.u32("version")?;
    if version != POSTERIOR_VERSION {
        return Err(Error::Binary {
            what: "posterior dump",
            offset: 4,
            reason: format!("unsupported version {version}"),
        });
    }
    let t = r.u32("frame count")? as usize;
    let p = r.u32("phoneme count")? as usize;
    let c = p + 1;
    let k = SUBSTATES * p + 1;
    let mut frames = Vec::with_capacity(t);
    for frame in 0..t {
        let left = r.f32s(c, &format!("frame {frame}"))?;
        let center = r.f32s(c * k, &format!("frame {frame}"))?;
        let right = r.f32s(c * k * c, &format!("frame {frame}"))?;
        frames.push(FactoredFramePosteriors::new(c, k, left, center, right)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Binary {
            what: "posterior dump",
            offset: r.pos,
            reason: "trailing bytes after last frame".into(),
        });
    }
    let scorer = TableScorer::new(c, k, frames)?;
    scorer.validate(DUMP_TOLERANCE)?;
    Ok(scorer)
}

pub fn table_scorer_from_file(path: impl AsRef<Path>) -> Result<TableScorer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_posteriors(&bytes)
}
