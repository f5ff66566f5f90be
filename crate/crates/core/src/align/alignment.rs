//! Frame-level alignments: the type, its text format and a topology
//! validator that replays the 0-1-2 automaton independently of Viterbi.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::inventory::{PhonemeInventory, TriphoneLabel};
use crate::lexicon::{expand_states, Lexicon};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alignment {
    pub utt: String,
    pub words: Vec<String>,
    pub labels: Vec<TriphoneLabel>,
}

impl Alignment {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Fraction of frames with identical labels.
    pub fn frame_agreement(&self, other: &Alignment) -> f64 {
        if self.labels.is_empty() {
            return 1.0;
        }
        let same = self.labels.iter().zip(&other.labels).filter(|(a, b)| a == b).count();
        same as f64 / self.labels.len().max(other.labels.len()) as f64
    }
}

pub fn format_alignments(inventory: &PhonemeInventory, alignments: &[Alignment]) -> String {
    let mut out = String::new();
    for a in alignments {
        let _ = writeln!(out, "#utt {} {}", a.utt, a.words.join(" "));
        for (t, label) in a.labels.iter().enumerate() {
            let _ = writeln!(out, "{t}\t{}", inventory.format_label(label));
        }
    }
    out
}

pub fn parse_alignments(inventory: &PhonemeInventory, text: &str) -> Result<Vec<Alignment>> {
    let err = |line: usize, reason: String| Error::Parse {
        what: "alignment",
        line,
        reason,
    };
    let mut out: Vec<Alignment> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#utt ") {
            let mut parts = rest.split_whitespace();
            let utt = parts.next().ok_or_else(|| err(n, "missing utterance id".into()))?;
            out.push(Alignment {
                utt: utt.to_string(),
                words: parts.map(str::to_string).collect(),
                labels: Vec::new(),
            });
            continue;
        }
        let current = out.last_mut().ok_or_else(|| err(n, "frame line before any `#utt` header".into()))?;
        let fields: Vec<&str> = line.split('\t').collect();
        let [t, l, c, r] = fields.as_slice() else {
            return Err(err(n, "expected `t<TAB>left<TAB>center<TAB>right`".into()));
        };
        let t: usize = t.parse().map_err(|_| err(n, format!("bad frame index `{t}`")))?;
        if t != current.labels.len() {
            return Err(err(n, format!("frame index {t}, expected {}", current.labels.len())));
        }
        let label = TriphoneLabel {
            left: inventory.parse_context(l).ok_or_else(|| err(n, format!("unknown context `{l}`")))?,
            center: inventory.parse_center(c).ok_or_else(|| err(n, format!("unknown center `{c}`")))?,
            right: inventory.parse_context(r).ok_or_else(|| err(n, format!("unknown context `{r}`")))?,
        };
        if !inventory.is_valid_label(&label) {
            return Err(err(n, "silence must have boundary contexts".into()));
        }
        current.labels.push(label);
    }
    Ok(out)
}

pub fn load_alignments(inventory: &PhonemeInventory, path: impl AsRef<Path>) -> Result<Vec<Alignment>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_alignments(inventory, &text)
}

pub fn save_alignments(inventory: &PhonemeInventory, path: impl AsRef<Path>, alignments: &[Alignment]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_alignments(inventory, alignments)).map_err(|e| Error::io(path, e))
}

/// Runs of identical consecutive labels.
pub fn label_runs(labels: &[TriphoneLabel]) -> Vec<(TriphoneLabel, usize)> {
    let mut runs: Vec<(TriphoneLabel, usize)> = Vec::new();
    for &l in labels {
        match runs.last_mut() {
            Some((prev, n)) if *prev == l => *n += 1,
            _ => runs.push((l, 1)),
        }
    }
    runs
}

/// Checks that the labels follow the expanded HMM of the word sequence:
/// every substate of every phone visited in order for at least one frame,
/// with optional silence only between words and at the edges.
pub fn validate_alignment(
    inventory: &PhonemeInventory,
    lexicon: &Lexicon,
    alignment: &Alignment,
    allow_silence: bool,
) -> Result<()> {
    let invalid = |reason: String| Error::InvalidAlignment {
        utt: alignment.utt.clone(),
        reason,
    };
    if alignment.labels.is_empty() {
        return Err(invalid("no frames".into()));
    }
    let runs: Vec<TriphoneLabel> = label_runs(&alignment.labels).into_iter().map(|(l, _)| l).collect();
    let mut expansions = Vec::with_capacity(alignment.words.len());
    for w in &alignment.words {
        let id = lexicon.word_id(w).ok_or_else(|| invalid(format!("word `{w}` not in lexicon")))?;
        let prons = lexicon
            .pronunciations_of(id)
            .map(|p| expand_states(inventory, &p.phones))
            .collect::<Result<Vec<_>>>()?;
        expansions.push(prons);
    }
    let silence = inventory.silence_label();

    // Depth-first match of runs against words, trying each pronunciation.
    fn matches(runs: &[TriphoneLabel], words: &[Vec<Vec<TriphoneLabel>>], silence: &TriphoneLabel, allow: bool) -> bool {
        let runs = match runs.first() {
            Some(l) if allow && l == silence => &runs[1..],
            _ => runs,
        };
        match words.split_first() {
            None => runs.is_empty(),
            Some((prons, rest)) => prons.iter().any(|states| {
                runs.len() >= states.len()
                    && runs[..states.len()] == states[..]
                    && matches(&runs[states.len()..], rest, silence, allow)
            }),
        }
    }
    if matches(&runs, &expansions, &silence, allow_silence) {
        Ok(())
    } else {
        Err(invalid("labels do not follow the expanded 0-1-2 HMM of the transcript".into()))
    }
}
