//! Pronunciation lexicon and within-word HMM expansion.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::inventory::{CenterState, ContextId, PhonemeId, PhonemeInventory, TriphoneLabel, SUBSTATES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WordId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pronunciation {
    pub word: WordId,
    pub phones: Vec<PhonemeId>,
}

#[derive(Clone, Debug)]
pub struct Lexicon {
    words: Vec<String>,
    index: HashMap<String, WordId>,
    prons: Vec<Pronunciation>,
    by_word: Vec<Vec<usize>>,
}

impl Lexicon {
    /// Builds a lexicon from `(word, phoneme symbols)` pairs. A word may
    /// appear more than once to add pronunciations.
    pub fn from_entries<'a, I, S>(inventory: &PhonemeInventory, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, S)>,
        S: AsRef<[&'a str]>,
    {
        let mut lex = Lexicon {
            words: Vec::new(),
            index: HashMap::new(),
            prons: Vec::new(),
            by_word: Vec::new(),
        };
        for (word, phones) in entries {
            lex.add(inventory, word, phones.as_ref())?;
        }
        Ok(lex)
    }

    fn add(&mut self, inventory: &PhonemeInventory, word: &str, phones: &[&str]) -> Result<()> {
        if phones.is_empty() {
            return Err(Error::Lexicon {
                word: word.to_string(),
                reason: "empty pronunciation".into(),
            });
        }
        let ids = phones
            .iter()
            .map(|p| {
                inventory.phoneme_id(p).ok_or_else(|| Error::Lexicon {
                    word: word.to_string(),
                    reason: format!("unknown phoneme `{p}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let id = match self.index.get(word) {
            Some(&id) => id,
            None => {
                let id = WordId(self.words.len());
                self.words.push(word.to_string());
                self.index.insert(word.to_string(), id);
                self.by_word.push(Vec::new());
                id
            }
        };
        self.by_word[id.0].push(self.prons.len());
        self.prons.push(Pronunciation { word: id, phones: ids });
        Ok(())
    }

    /// Parses `word<TAB>phoneme phoneme ...` lines.
    pub fn parse(inventory: &PhonemeInventory, text: &str) -> Result<Self> {
        let mut entries: Vec<(String, Vec<String>)> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (word, pron) = line.split_once('\t').ok_or_else(|| Error::Parse {
                what: "lexicon",
                line: n + 1,
                reason: "expected `word<TAB>phonemes`".into(),
            })?;
            entries.push((
                word.trim().to_string(),
                pron.split_whitespace().map(str::to_string).collect(),
            ));
        }
        let borrowed: Vec<(&str, Vec<&str>)> = entries
            .iter()
            .map(|(w, p)| (w.as_str(), p.iter().map(String::as_str).collect()))
            .collect();
        Self::from_entries(inventory, borrowed)
    }

    pub fn load(inventory: &PhonemeInventory, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(inventory, &text)
    }

    pub fn to_text(&self, inventory: &PhonemeInventory) -> String {
        let mut out = String::new();
        for p in &self.prons {
            let phones: Vec<&str> = p.phones.iter().map(|&ph| inventory.phoneme_symbol(ph)).collect();
            out.push_str(&self.words[p.word.0]);
            out.push('\t');
            out.push_str(&phones.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.prons.is_empty()
    }

    pub fn num_words(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id.0]
    }

    pub fn word_id(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    pub fn pronunciations(&self) -> &[Pronunciation] {
        &self.prons
    }

    pub fn pronunciations_of(&self, word: WordId) -> impl Iterator<Item = &Pronunciation> + '_ {
        self.by_word[word.0].iter().map(move |&i| &self.prons[i])
    }
}

/// How contexts are assigned at word edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ContextMode {
    /// Within-word triphones: the boundary symbol fills the context outside the word.
    #[default]
    WithinWordBoundary,
}

/// Expands a pronunciation into its 0-1-2 triphone states, one group of
/// three labels per phoneme.
pub fn hmm_expand(
    inventory: &PhonemeInventory,
    pronunciation: &[PhonemeId],
    _mode: ContextMode,
) -> Result<Vec<[TriphoneLabel; SUBSTATES]>> {
    if pronunciation.is_empty() {
        return Err(Error::EmptyPronunciation);
    }
    let boundary = inventory.boundary();
    let ctx = |i: Option<usize>| -> ContextId {
        i.and_then(|i| pronunciation.get(i))
            .map(|&p| inventory.context_of(p))
            .unwrap_or(boundary)
    };
    Ok(pronunciation
        .iter()
        .enumerate()
        .map(|(i, &phoneme)| {
            let left = ctx(i.checked_sub(1));
            let right = ctx(Some(i + 1));
            std::array::from_fn(|s| TriphoneLabel {
                left,
                center: CenterState::Phone {
                    phoneme,
                    substate: s as u8,
                },
                right,
            })
        })
        .collect())
}

/// Flat state sequence of a pronunciation.
pub fn expand_states(inventory: &PhonemeInventory, pronunciation: &[PhonemeId]) -> Result<Vec<TriphoneLabel>> {
    Ok(hmm_expand(inventory, pronunciation, ContextMode::WithinWordBoundary)?
        .into_iter()
        .flatten()
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inv() -> PhonemeInventory {
        PhonemeInventory::parse("sil\nk\nae\nt\nb\nah\n").unwrap()
    }

    fn ids(inv: &PhonemeInventory, p: &[&str]) -> Vec<PhonemeId> {
        p.iter().map(|s| inv.phoneme_id(s).unwrap()).collect()
    }

    #[test]
    fn cat_expansion() {
        let inv = inv();
        let labels = expand_states(&inv, &ids(&inv, &["k", "ae", "t"])).unwrap();
        assert_eq!(labels.len(), 9);
        assert_eq!(inv.format_label(&labels[0]), "#\tk.0\tae");
        assert_eq!(inv.format_label(&labels[4]), "k\tae.1\tt");
        assert_eq!(inv.format_label(&labels[8]), "ae\tt.2\t#");
    }

    #[test]
    fn single_phoneme_word() {
        let inv = inv();
        let groups = hmm_expand(&inv, &ids(&inv, &["ah"]), ContextMode::WithinWordBoundary).unwrap();
        assert_eq!(groups.len(), 1);
        for (s, l) in groups[0].iter().enumerate() {
            assert_eq!(inv.format_label(l), format!("#\tah.{s}\t#"));
        }
    }

    #[test]
    fn empty_pronunciation_rejected() {
        assert!(matches!(
            hmm_expand(&inv(), &[], ContextMode::WithinWordBoundary),
            Err(Error::EmptyPronunciation)
        ));
    }

    #[test]
    fn parse_lexicon() {
        let inv = inv();
        let lex = Lexicon::parse(&inv, "cat\tk ae t\ncab\tk ae b\ncat\tk ah t\n").unwrap();
        assert_eq!(lex.num_words(), 2);
        assert_eq!(lex.pronunciations().len(), 3);
        let cat = lex.word_id("cat").unwrap();
        assert_eq!(lex.pronunciations_of(cat).count(), 2);
        let round = Lexicon::parse(&inv, &lex.to_text(&inv)).unwrap();
        assert_eq!(round.pronunciations(), lex.pronunciations());
    }

    #[test]
    fn unknown_phoneme_names_word() {
        let err = Lexicon::parse(&inv(), "dog\td o g\n").unwrap_err();
        assert!(err.to_string().contains("dog"), "{err}");
        assert!(Lexicon::parse(&inv(), "dog k\n").is_err());
    }

    proptest! {
        #[test]
        fn expansion_length(pron in proptest::collection::vec(0usize..5, 1..8)) {
            let inv = inv();
            let pron: Vec<PhonemeId> = pron.into_iter().map(PhonemeId).collect();
            let labels = expand_states(&inv, &pron).unwrap();
            prop_assert_eq!(labels.len(), 3 * pron.len());
            prop_assert_eq!(labels[0].left, inv.boundary());
            prop_assert_eq!(labels.last().unwrap().right, inv.boundary());
        }
    }
}
