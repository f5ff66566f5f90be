//! Single-Gaussian, diagonal-covariance monophone state models.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::inventory::{CenterState, PhonemeInventory};

use super::{Alignment, FeatureSequence};

pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct StateGaussian {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl StateGaussian {
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut ll = 0.0;
        for ((&xi, &m), &v) in x.iter().zip(&self.mean).zip(&self.variance) {
            ll -= 0.5 * ((2.0 * PI * v).ln() + (xi - m) * (xi - m) / v);
        }
        ll
    }
}

/// One Gaussian per center state, indexed densely.
#[derive(Clone, Debug, PartialEq)]
pub struct MonophoneGaussians {
    pub dim: usize,
    pub variance_floor: f64,
    pub states: Vec<StateGaussian>,
}

impl MonophoneGaussians {
    pub fn state(&self, inventory: &PhonemeInventory, center: CenterState) -> &StateGaussian {
        &self.states[inventory.center_index(center)]
    }

    pub fn to_text(&self, inventory: &PhonemeInventory) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        let _ = writeln!(out, "fhmm-gaussians 1");
        let _ = writeln!(out, "dim\t{}", self.dim);
        let _ = writeln!(out, "floor\t{}", self.variance_floor);
        for (i, g) in self.states.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                inventory.center_symbol(inventory.center_from_index(i)),
                join(&g.mean),
                join(&g.variance)
            );
        }
        out
    }

    pub fn parse(inventory: &PhonemeInventory, text: &str) -> Result<Self> {
        let err = |line: usize, reason: String| Error::Parse {
            what: "gaussians",
            line,
            reason,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        if lines.next().map(|(_, l)| l) != Some("fhmm-gaussians 1") {
            return Err(err(1, "expected `fhmm-gaussians 1`".into()));
        }
        let mut field = |name: &str| -> Result<f64> {
            let (n, line) = lines.next().ok_or_else(|| err(0, format!("missing {name}")))?;
            line.strip_prefix(name)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| err(n, format!("expected `{name}<TAB>value`")))
        };
        let dim = field("dim")? as usize;
        let variance_floor = field("floor")?;
        let k = inventory.num_centers();
        let mut states: Vec<Option<StateGaussian>> = vec![None; k];
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            let [c, m, v] = parts.as_slice() else {
                return Err(err(n, "expected `center<TAB>means<TAB>variances`".into()));
            };
            let center = inventory.parse_center(c).ok_or_else(|| err(n, format!("unknown center `{c}`")))?;
            let nums = |s: &str| -> Result<Vec<f64>> {
                let v: Vec<f64> = s
                    .split_whitespace()
                    .map(|x| x.parse().map_err(|_| err(n, format!("bad number `{x}`"))))
                    .collect::<Result<_>>()?;
                if v.len() != dim {
                    return Err(err(n, format!("expected {dim} values, got {}", v.len())));
                }
                Ok(v)
            };
            states[inventory.center_index(center)] = Some(StateGaussian {
                mean: nums(m)?,
                variance: nums(v)?,
            });
        }
        let states = states
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                s.ok_or_else(|| err(0, format!("missing state {}", inventory.center_symbol(inventory.center_from_index(i)))))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim,
            variance_floor,
            states,
        })
    }

    pub fn load(inventory: &PhonemeInventory, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(inventory, &text)
    }

    pub fn save(&self, inventory: &PhonemeInventory, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text(inventory)).map_err(|e| Error::io(path, e))
    }
}

pub fn gaussian_frame_log_likelihood(
    model: &MonophoneGaussians,
    inventory: &PhonemeInventory,
    state: CenterState,
    frame: &[f64],
) -> f64 {
    model.state(inventory, state).log_density(frame)
}

/// Maximum-likelihood mean and diagonal variance per center state, the
/// variance floored. States without frames get the global statistics.
pub fn estimate_gaussians(
    inventory: &PhonemeInventory,
    corpus: &[(&FeatureSequence, &Alignment)],
    variance_floor: f64,
) -> Result<MonophoneGaussians> {
    if !(variance_floor > 0.0) {
        return Err(Error::Config(format!("variance floor must be positive, got {variance_floor}")));
    }
    let total_frames: usize = corpus.iter().map(|(f, _)| f.len()).sum();
    if total_frames == 0 {
        return Err(Error::EmptyCorpus);
    }
    let dim = corpus[0].0.dim();
    for (f, a) in corpus {
        if f.dim() != dim {
            return Err(Error::Dimension(format!("feature dimension {} vs {dim}", f.dim())));
        }
        if f.len() != a.len() {
            return Err(Error::Dimension(format!(
                "utterance `{}`: {} feature frames but {} aligned frames",
                a.utt,
                f.len(),
                a.len()
            )));
        }
    }
    let k = inventory.num_centers();
    let mut counts = vec![0usize; k];
    let mut sums = vec![vec![0.0; dim]; k];
    let mut global = vec![0.0; dim];
    for (f, a) in corpus {
        for (x, label) in f.frames().zip(&a.labels) {
            let c = inventory.center_index(label.center);
            counts[c] += 1;
            for d in 0..dim {
                sums[c][d] += x[d];
                global[d] += x[d];
            }
        }
    }
    let means: Vec<Vec<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| s.iter().map(|v| if n > 0 { v / n as f64 } else { 0.0 }).collect())
        .collect();
    let global_mean: Vec<f64> = global.iter().map(|v| v / total_frames as f64).collect();
    let mut sq = vec![vec![0.0; dim]; k];
    let mut global_sq = vec![0.0; dim];
    for (f, a) in corpus {
        for (x, label) in f.frames().zip(&a.labels) {
            let c = inventory.center_index(label.center);
            for d in 0..dim {
                sq[c][d] += (x[d] - means[c][d]).powi(2);
                global_sq[d] += (x[d] - global_mean[d]).powi(2);
            }
        }
    }
    let floored = |v: f64| v.max(variance_floor);
    let global_var: Vec<f64> = global_sq.iter().map(|v| floored(v / total_frames as f64)).collect();
    let states = (0..k)
        .map(|c| {
            if counts[c] == 0 {
                StateGaussian {
                    mean: global_mean.clone(),
                    variance: global_var.clone(),
                }
            } else {
                StateGaussian {
                    mean: means[c].clone(),
                    variance: sq[c].iter().map(|v| floored(v / counts[c] as f64)).collect(),
                }
            }
        })
        .collect();
    Ok(MonophoneGaussians {
        dim,
        variance_floor,
        states,
    })
}
