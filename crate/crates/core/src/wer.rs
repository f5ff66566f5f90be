//! Word error rate by unit-cost edit distance.

use std::fs;
use std::ops::{Add, AddAssign};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub reference_len: usize,
}

impl EvalCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// Errors over reference words; an empty reference gives 0 without
    /// errors and infinity otherwise.
    pub fn wer(&self) -> f64 {
        match (self.errors(), self.reference_len) {
            (0, _) => 0.0,
            (_, 0) => f64::INFINITY,
            (e, n) => e as f64 / n as f64,
        }
    }
}

impl Add for EvalCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            substitutions: self.substitutions + o.substitutions,
            deletions: self.deletions + o.deletions,
            insertions: self.insertions + o.insertions,
            reference_len: self.reference_len + o.reference_len,
        }
    }
}

impl AddAssign for EvalCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Minimal edit alignment. Among equal-cost alignments the traceback
/// prefers substitution, then insertion, then deletion.
pub fn wer<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> EvalCounts {
    let (n, m) = (reference.len(), hypothesis.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = d[i - 1][j - 1] + usize::from(reference[i - 1].as_ref() != hypothesis[j - 1].as_ref());
            d[i][j] = diag.min(d[i][j - 1] + 1).min(d[i - 1][j] + 1);
        }
    }
    let mut c = EvalCounts {
        reference_len: n,
        ..EvalCounts::default()
    };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let same = reference[i - 1].as_ref() == hypothesis[j - 1].as_ref();
            if d[i][j] == d[i - 1][j - 1] + usize::from(!same) {
                c.substitutions += usize::from(!same);
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if j > 0 && d[i][j] == d[i][j - 1] + 1 {
            c.insertions += 1;
            j -= 1;
        } else {
            c.deletions += 1;
            i -= 1;
        }
    }
    c
}

/// `<utt-id> <word ...>` per line, in file order.
pub fn parse_transcripts(text: &str) -> Result<Vec<(String, Vec<String>)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let Some(id) = parts.next() else { continue };
        if out.iter().any(|(u, _): &(String, Vec<String>)| u == id) {
            return Err(Error::Parse {
                what: "transcripts",
                line: i + 1,
                reason: format!("duplicate utterance `{id}`"),
            });
        }
        out.push((id.to_string(), parts.map(str::to_string).collect()));
    }
    Ok(out)
}

pub fn load_transcripts(path: impl AsRef<Path>) -> Result<Vec<(String, Vec<String>)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_transcripts(&text)
}

pub fn format_transcripts(entries: &[(String, Vec<String>)]) -> String {
    let mut out = String::new();
    for (id, words) in entries {
        out.push_str(id);
        for w in words {
            out.push(' ');
            out.push_str(w);
        }
        out.push('\n');
    }
    out
}

/// Corpus totals over matching utterance ids; hypotheses missing for a
/// reference count as all deletions.
pub fn corpus_wer(references: &[(String, Vec<String>)], hypotheses: &[(String, Vec<String>)]) -> EvalCounts {
    let empty = Vec::new();
    references
        .iter()
        .map(|(id, r)| {
            let h = hypotheses.iter().find(|(u, _)| u == id).map_or(&empty, |(_, h)| h);
            wer(r, h)
        })
        .fold(EvalCounts::default(), Add::add)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn examples() {
        assert_eq!(wer(&w("a b c"), &w("a b c")).wer(), 0.0);
        let c = wer(&w("a b c"), &w("a x c"));
        assert_eq!((c.substitutions, c.deletions, c.insertions), (1, 0, 0));
        assert!((c.wer() - 1.0 / 3.0).abs() < 1e-15);
        let c = wer(&w("a b"), &w(""));
        assert_eq!(c.deletions, 2);
        assert_eq!(c.wer(), 1.0);
    }

    #[test]
    fn tie_prefers_substitution_then_insertion() {
        // "a b" vs "b c": two substitutions or one deletion plus one insertion.
        let c = wer(&w("a b"), &w("b c"));
        assert_eq!((c.substitutions, c.deletions, c.insertions), (2, 0, 0));
        let c = wer(&w("a"), &w("b c"));
        assert_eq!((c.substitutions, c.insertions), (1, 1));
    }

    #[test]
    fn transcripts_round_trip() {
        let t = parse_transcripts("u1 a b\nu2\n\n").unwrap();
        assert_eq!(t[1], ("u2".to_string(), vec![]));
        assert_eq!(parse_transcripts(&format_transcripts(&t)).unwrap(), t);
        assert!(parse_transcripts("u a\nu b\n").is_err());
    }
}
