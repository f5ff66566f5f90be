use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"FHFT";
pub const FEATURE_VERSION: u32 = 1;

/// T x D matrix of opaque acoustic features, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSequence {
    dim: usize,
    data: Vec<f64>,
    pub frame_shift_ms: f64,
}

impl FeatureSequence {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.is_empty() || data.len() % dim != 0 {
            return Err(Error::Dimension(format!(
                "{} values do not form a non-empty matrix with {dim} columns",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Dimension(format!("non-finite feature at frame {}", i / dim)));
        }
        Ok(Self {
            dim,
            data,
            frame_shift_ms: 10.0,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("ragged feature rows".into()));
        }
        Self::new(dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 * self.frame_shift_ms / 1000.0
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.data.len());
        out.extend_from_slice(FEATURE_MAGIC);
        for v in [FEATURE_VERSION, self.len() as u32, self.dim as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &x in &self.data {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = |offset: usize, reason: &str| Error::Binary {
            what: "feature file",
            offset,
            reason: reason.to_string(),
        };
        if bytes.len() < 16 {
            return Err(bad(bytes.len(), "truncated header"));
        }
        if &bytes[..4] != FEATURE_MAGIC {
            return Err(bad(0, "bad magic, expected FHFT"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        if word(4) != FEATURE_VERSION as usize {
            return Err(bad(4, "unsupported version"));
        }
        let (t, d) = (word(8), word(12));
        let expected = 16 + 4 * t * d;
        if bytes.len() < expected {
            return Err(bad(bytes.len(), "truncated feature data"));
        }
        if bytes.len() > expected {
            return Err(bad(expected, "trailing bytes"));
        }
        let data = bytes[16..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        Self::new(d, data)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }
}
