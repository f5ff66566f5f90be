//! Back-off n-gram language model read from ARPA text.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const SENTENCE_BEGIN: &str = "<s>";
pub const SENTENCE_END: &str = "</s>";
pub const UNKNOWN_WORD: &str = "<unk>";

pub type LmWord = u32;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Entry {
    log10_prob: f64,
    log10_backoff: Option<f64>,
    prob: f64,
    backoff: f64,
}

impl Entry {
    fn new(log10_prob: f64, log10_backoff: Option<f64>) -> Self {
        Self {
            log10_prob,
            log10_backoff,
            prob: log10_prob * std::f64::consts::LN_10,
            backoff: log10_backoff.unwrap_or(0.0) * std::f64::consts::LN_10,
        }
    }
}

/// Katz back-off model with natural-log scores.
#[derive(Clone, Debug)]
pub struct NGramLM {
    order: usize,
    vocab: Vec<String>,
    ids: HashMap<String, LmWord>,
    /// Per order, entries in file order.
    ngrams: Vec<Vec<(Vec<LmWord>, Entry)>>,
    index: Vec<HashMap<Vec<LmWord>, usize>>,
    unk: Option<LmWord>,
}

fn perr(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        what: "ARPA",
        line,
        reason: reason.into(),
    }
}

impl NGramLM {
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let mut pos = lines
            .iter()
            .position(|(_, l)| *l == "\\data\\")
            .ok_or_else(|| perr(lines.first().map_or(1, |l| l.0), "missing \\data\\ section"))?
            + 1;
        let mut declared: Vec<usize> = Vec::new();
        while let Some(&(n, line)) = lines.get(pos) {
            let Some(spec) = line.strip_prefix("ngram ") else { break };
            let (k, count) = spec.split_once('=').ok_or_else(|| perr(n, "expected `ngram N=count`"))?;
            let k: usize = k.trim().parse().map_err(|_| perr(n, "bad n-gram order"))?;
            let count: usize = count.trim().parse().map_err(|_| perr(n, "bad n-gram count"))?;
            if k != declared.len() + 1 {
                return Err(perr(n, format!("n-gram orders must be listed 1..N, got {k}")));
            }
            declared.push(count);
            pos += 1;
        }
        if declared.is_empty() {
            return Err(perr(lines.get(pos).map_or(0, |l| l.0), "no `ngram N=count` lines"));
        }
        let order = declared.len();
        let mut lm = NGramLM {
            order,
            vocab: Vec::new(),
            ids: HashMap::new(),
            ngrams: vec![Vec::new(); order],
            index: vec![HashMap::new(); order],
            unk: None,
        };
        for (k, &count) in declared.iter().enumerate().map(|(i, c)| (i + 1, c)) {
            let &(header_line, header) = lines
                .get(pos)
                .ok_or_else(|| perr(0, format!("missing \\{k}-grams: section")))?;
            if header != format!("\\{k}-grams:") {
                return Err(perr(header_line, format!("expected \\{k}-grams:, found `{header}`")));
            }
            pos += 1;
            let start = pos;
            while let Some(&(n, line)) = lines.get(pos) {
                if line.starts_with('\\') {
                    break;
                }
                lm.add_line(k, n, line)?;
                pos += 1;
            }
            let found = pos - start;
            if found != count {
                return Err(perr(header_line, format!("\\data\\ declares {count} {k}-grams but section has {found}")));
            }
        }
        match lines.get(pos) {
            Some((_, "\\end\\")) => {}
            Some(&(n, other)) => return Err(perr(n, format!("expected \\end\\, found `{other}`"))),
            None => return Err(perr(lines.last().map_or(0, |l| l.0), "missing \\end\\")),
        }
        lm.unk = lm.ids.get(UNKNOWN_WORD).copied();
        Ok(lm)
    }

    fn add_line(&mut self, k: usize, n: usize, line: &str) -> Result<()> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != k + 1 && fields.len() != k + 2 {
            return Err(perr(n, format!("{k}-gram line needs {} or {} fields", k + 1, k + 2)));
        }
        let number = |s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| perr(n, format!("bad number `{s}`")))?;
            if !v.is_finite() {
                return Err(perr(n, format!("non-finite value `{s}`")));
            }
            Ok(v)
        };
        let log10_prob = number(fields[0])?;
        if log10_prob > 0.0 {
            return Err(perr(n, "log10 probability above 0"));
        }
        let backoff = fields.get(k + 1).map(|s| number(s)).transpose()?;
        let mut key = Vec::with_capacity(k);
        for &w in &fields[1..=k] {
            let id = match self.ids.get(w) {
                Some(&id) => id,
                None if k == 1 => {
                    let id = self.vocab.len() as LmWord;
                    self.vocab.push(w.to_string());
                    self.ids.insert(w.to_string(), id);
                    id
                }
                None => return Err(perr(n, format!("word `{w}` has no unigram"))),
            };
            key.push(id);
        }
        let table = &mut self.index[k - 1];
        if table.contains_key(&key) {
            return Err(perr(n, "duplicate n-gram"));
        }
        table.insert(key.clone(), self.ngrams[k - 1].len());
        self.ngrams[k - 1].push((key, Entry::new(log10_prob, backoff)));
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_arpa(&self) -> String {
        let mut out = String::from("\\data\\\n");
        for (k, table) in self.ngrams.iter().enumerate() {
            let _ = writeln!(out, "ngram {}={}", k + 1, table.len());
        }
        for (k, table) in self.ngrams.iter().enumerate() {
            let _ = writeln!(out, "\n\\{}-grams:", k + 1);
            for (key, e) in table {
                let words: Vec<&str> = key.iter().map(|&w| self.vocab[w as usize].as_str()).collect();
                let _ = write!(out, "{}\t{}", e.log10_prob, words.join(" "));
                if let Some(b) = e.log10_backoff {
                    let _ = write!(out, "\t{b}");
                }
                out.push('\n');
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_arpa()).map_err(|e| Error::io(path, e))
    }

    /// Uniform unigram model over `words`.
    pub fn uniform<S: AsRef<str>>(words: &[S]) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::Config("uniform LM over an empty vocabulary".into()));
        }
        let p = -(words.len() as f64).log10();
        let mut text = format!("\\data\\\nngram 1={}\n\\1-grams:\n", words.len());
        for w in words {
            let _ = writeln!(text, "{p} {}", w.as_ref());
        }
        text.push_str("\\end\\\n");
        Self::parse(&text)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn num_ngrams(&self, k: usize) -> usize {
        self.ngrams.get(k.wrapping_sub(1)).map_or(0, Vec::len)
    }

    pub fn word_symbol(&self, id: LmWord) -> &str {
        &self.vocab[id as usize]
    }

    /// Vocabulary id of `word`, mapping unknown words to `<unk>` when present.
    pub fn word_id(&self, word: &str) -> Result<LmWord> {
        self.ids
            .get(word)
            .copied()
            .or(self.unk)
            .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))
    }

    pub fn sentence_begin(&self) -> Option<LmWord> {
        self.ids.get(SENTENCE_BEGIN).copied()
    }

    /// History a decoder starts from.
    pub fn initial_history(&self) -> Vec<LmWord> {
        self.sentence_begin().into_iter().collect()
    }

    /// Keeps the last n-1 words.
    pub fn truncate_history(&self, history: &mut Vec<LmWord>) {
        let keep = self.order - 1;
        if history.len() > keep {
            history.drain(..history.len() - keep);
        }
    }

    /// Natural-log p(word | history) by Katz back-off.
    pub fn score_ids(&self, history: &[LmWord], word: LmWord) -> f64 {
        let keep = history.len().min(self.order - 1);
        let mut h = &history[history.len() - keep..];
        let mut backoff = 0.0;
        let mut key = Vec::with_capacity(self.order);
        loop {
            key.clear();
            key.extend_from_slice(h);
            key.push(word);
            if let Some(&i) = self.index[h.len()].get(&key) {
                return backoff + self.ngrams[h.len()][i].1.prob;
            }
            if h.is_empty() {
                return f64::NEG_INFINITY;
            }
            if let Some(&i) = self.index[h.len() - 1].get(h) {
                backoff += self.ngrams[h.len() - 1][i].1.backoff;
            }
            h = &h[1..];
        }
    }

    pub fn score_word<S: AsRef<str>>(&self, history: &[S], word: &str) -> Result<f64> {
        let h = history.iter().map(|w| self.word_id(w.as_ref())).collect::<Result<Vec<_>>>()?;
        Ok(self.score_ids(&h, self.word_id(word)?))
    }
}

pub fn load_arpa(path: impl AsRef<Path>) -> Result<NGramLM> {
    NGramLM::load(path)
}
