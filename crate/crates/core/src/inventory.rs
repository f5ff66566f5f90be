//! Phoneme inventory, center states, untied triphone labels and the dense
//! state space over them.
//!
//! Context symbols are the phonemes followed by the boundary symbol, so
//! `ContextId(P)` is always the boundary. Center states are indexed
//! `3 * phoneme + substate`, with silence last at `3 * P`.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const DEFAULT_BOUNDARY: &str = "#";

/// Number of HMM substates per phoneme (0-1-2 topology).
pub const SUBSTATES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhonemeId(pub usize);

/// A left/right context symbol: a phoneme or the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CenterState {
    Phone { phoneme: PhonemeId, substate: u8 },
    Silence,
}

impl CenterState {
    pub fn phone(phoneme: usize, substate: u8) -> Self {
        debug_assert!((substate as usize) < SUBSTATES);
        CenterState::Phone {
            phoneme: PhonemeId(phoneme),
            substate,
        }
    }

    pub fn is_silence(&self) -> bool {
        matches!(self, CenterState::Silence)
    }

    pub fn substate(&self) -> Option<u8> {
        match *self {
            CenterState::Phone { substate, .. } => Some(substate),
            CenterState::Silence => None,
        }
    }
}

/// The untied state identity: (left context, center state, right context).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriphoneLabel {
    pub left: ContextId,
    pub center: CenterState,
    pub right: ContextId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhonemeInventory {
    phonemes: Vec<String>,
    silence: String,
    boundary: String,
    index: HashMap<String, usize>,
}

impl PhonemeInventory {
    pub fn new(
        phonemes: Vec<String>,
        silence: impl Into<String>,
        boundary: impl Into<String>,
    ) -> Result<Self> {
        let silence = silence.into();
        let boundary = boundary.into();
        if silence == boundary {
            return Err(Error::Inventory(format!(
                "silence and boundary symbol are both `{silence}`"
            )));
        }
        let mut index = HashMap::with_capacity(phonemes.len());
        for (i, p) in phonemes.iter().enumerate() {
            if p.is_empty() || p.chars().any(char::is_whitespace) {
                return Err(Error::Inventory(format!("bad phoneme symbol {p:?}")));
            }
            if *p == silence || *p == boundary {
                return Err(Error::Inventory(format!(
                    "`{p}` is reserved for silence or boundary"
                )));
            }
            if index.insert(p.clone(), i).is_some() {
                return Err(Error::Inventory(format!("duplicate phoneme `{p}`")));
            }
        }
        Ok(Self {
            phonemes,
            silence,
            boundary,
            index,
        })
    }

    /// Reads the one-symbol-per-line format; the first line is the silence symbol.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with("//"));
        let silence = lines
            .next()
            .ok_or_else(|| Error::Inventory("empty inventory file".into()))?;
        let phonemes = lines.map(str::to_string).collect();
        Self::new(phonemes, silence, DEFAULT_BOUNDARY)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.silence);
        out.push('\n');
        for p in &self.phonemes {
            out.push_str(p);
            out.push('\n');
        }
        out
    }

    pub fn num_phonemes(&self) -> usize {
        self.phonemes.len()
    }

    /// Phonemes plus the boundary symbol.
    pub fn num_contexts(&self) -> usize {
        self.phonemes.len() + 1
    }

    /// Three substates per phoneme plus silence.
    pub fn num_centers(&self) -> usize {
        SUBSTATES * self.phonemes.len() + 1
    }

    pub fn phonemes(&self) -> &[String] {
        &self.phonemes
    }

    pub fn silence_symbol(&self) -> &str {
        &self.silence
    }

    pub fn boundary_symbol(&self) -> &str {
        &self.boundary
    }

    pub fn phoneme_id(&self, symbol: &str) -> Option<PhonemeId> {
        self.index.get(symbol).copied().map(PhonemeId)
    }

    pub fn phoneme_symbol(&self, id: PhonemeId) -> &str {
        &self.phonemes[id.0]
    }

    pub fn boundary(&self) -> ContextId {
        ContextId(self.phonemes.len())
    }

    pub fn context_of(&self, phoneme: PhonemeId) -> ContextId {
        ContextId(phoneme.0)
    }

    pub fn context_symbol(&self, ctx: ContextId) -> &str {
        if ctx == self.boundary() {
            &self.boundary
        } else {
            &self.phonemes[ctx.0]
        }
    }

    pub fn parse_context(&self, symbol: &str) -> Option<ContextId> {
        if symbol == self.boundary {
            Some(self.boundary())
        } else {
            self.phoneme_id(symbol).map(|p| ContextId(p.0))
        }
    }

    pub fn center_index(&self, center: CenterState) -> usize {
        match center {
            CenterState::Phone { phoneme, substate } => SUBSTATES * phoneme.0 + substate as usize,
            CenterState::Silence => SUBSTATES * self.phonemes.len(),
        }
    }

    pub fn center_from_index(&self, index: usize) -> CenterState {
        let silence = SUBSTATES * self.phonemes.len();
        assert!(index <= silence, "center index {index} out of range");
        if index == silence {
            CenterState::Silence
        } else {
            CenterState::phone(index / SUBSTATES, (index % SUBSTATES) as u8)
        }
    }

    pub fn center_symbol(&self, center: CenterState) -> String {
        match center {
            CenterState::Phone { phoneme, substate } => {
                format!("{}.{}", self.phonemes[phoneme.0], substate)
            }
            CenterState::Silence => self.silence.clone(),
        }
    }

    /// Parses `phoneme.substate` or the silence symbol.
    pub fn parse_center(&self, symbol: &str) -> Option<CenterState> {
        if symbol == self.silence {
            return Some(CenterState::Silence);
        }
        let (p, s) = symbol.rsplit_once('.')?;
        let phoneme = self.phoneme_id(p)?;
        let substate: u8 = s.parse().ok()?;
        ((substate as usize) < SUBSTATES).then_some(CenterState::Phone { phoneme, substate })
    }

    /// The context-independent silence label.
    pub fn silence_label(&self) -> TriphoneLabel {
        TriphoneLabel {
            left: self.boundary(),
            center: CenterState::Silence,
            right: self.boundary(),
        }
    }

    pub fn format_label(&self, label: &TriphoneLabel) -> String {
        format!(
            "{}\t{}\t{}",
            self.context_symbol(label.left),
            self.center_symbol(label.center),
            self.context_symbol(label.right)
        )
    }

    /// Checks the silence-is-context-independent invariant and index ranges.
    pub fn is_valid_label(&self, label: &TriphoneLabel) -> bool {
        let c = self.num_contexts();
        match label.center {
            CenterState::Silence => {
                label.left == self.boundary() && label.right == self.boundary()
            }
            CenterState::Phone { phoneme, substate } => {
                phoneme.0 < self.phonemes.len()
                    && (substate as usize) < SUBSTATES
                    && label.left.0 < c
                    && label.right.0 < c
            }
        }
    }
}

impl fmt::Display for PhonemeInventory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} phonemes, silence `{}`, boundary `{}`",
            self.phonemes.len(),
            self.silence,
            self.boundary
        )
    }
}

/// Dense enumeration of every valid triphone label.
///
/// Ordering is left-major, then center, then right; the silence label comes
/// last.
#[derive(Clone, Debug)]
pub struct StateSpace {
    inventory: PhonemeInventory,
}

impl StateSpace {
    pub fn new(inventory: PhonemeInventory) -> Self {
        Self { inventory }
    }

    pub fn inventory(&self) -> &PhonemeInventory {
        &self.inventory
    }

    pub fn num_contexts(&self) -> usize {
        self.inventory.num_contexts()
    }

    pub fn num_centers(&self) -> usize {
        self.inventory.num_centers()
    }

    fn phone_centers(&self) -> usize {
        SUBSTATES * self.inventory.num_phonemes()
    }

    pub fn len(&self) -> usize {
        let c = self.num_contexts();
        c * self.phone_centers() * c + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, label: &TriphoneLabel) -> Option<usize> {
        if !self.inventory.is_valid_label(label) {
            return None;
        }
        let c = self.num_contexts();
        match label.center {
            CenterState::Silence => Some(self.len() - 1),
            center => {
                let ci = self.inventory.center_index(center);
                Some((label.left.0 * self.phone_centers() + ci) * c + label.right.0)
            }
        }
    }

    pub fn label_at(&self, index: usize) -> Option<TriphoneLabel> {
        let n = self.len();
        if index >= n {
            return None;
        }
        if index == n - 1 {
            return Some(self.inventory.silence_label());
        }
        let c = self.num_contexts();
        let right = index % c;
        let rest = index / c;
        let ci = rest % self.phone_centers();
        let left = rest / self.phone_centers();
        Some(TriphoneLabel {
            left: ContextId(left),
            center: self.inventory.center_from_index(ci),
            right: ContextId(right),
        })
    }

    pub fn labels(&self) -> impl Iterator<Item = TriphoneLabel> + '_ {
        (0..self.len()).map(move |i| self.label_at(i).expect("index in range"))
    }
}

pub fn build_state_space(inventory: PhonemeInventory) -> StateSpace {
    StateSpace::new(inventory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inv(ps: &[&str]) -> PhonemeInventory {
        PhonemeInventory::new(ps.iter().map(|s| s.to_string()).collect(), "sil", "#").unwrap()
    }

    #[test]
    fn two_phoneme_sizes() {
        let space = build_state_space(inv(&["a", "b"]));
        assert_eq!(space.num_centers(), 7);
        assert_eq!(space.len(), 55);
    }

    #[test]
    fn silence_only_inventory() {
        let space = build_state_space(inv(&[]));
        assert_eq!(space.len(), 1);
        assert_eq!(space.label_at(0), Some(space.inventory().silence_label()));
    }

    #[test]
    fn rejects_duplicates_and_reserved() {
        assert!(PhonemeInventory::new(vec!["a".into(), "a".into()], "sil", "#").is_err());
        assert!(PhonemeInventory::new(vec!["sil".into()], "sil", "#").is_err());
        assert!(PhonemeInventory::new(vec!["#".into()], "sil", "#").is_err());
        assert!(PhonemeInventory::new(vec![], "x", "x").is_err());
    }

    #[test]
    fn parse_file_format() {
        let inv = PhonemeInventory::parse("sil\nk\nae\nt\n\n").unwrap();
        assert_eq!(inv.silence_symbol(), "sil");
        assert_eq!(inv.phonemes(), &["k", "ae", "t"]);
        assert_eq!(PhonemeInventory::parse(&inv.to_text()).unwrap(), inv);
    }

    #[test]
    fn center_symbols_round_trip() {
        let inv = inv(&["a", "b"]);
        for i in 0..inv.num_centers() {
            let c = inv.center_from_index(i);
            assert_eq!(inv.parse_center(&inv.center_symbol(c)), Some(c));
            assert_eq!(inv.center_index(c), i);
        }
        assert_eq!(inv.parse_center("a.3"), None);
        assert_eq!(inv.parse_center("z.0"), None);
    }

    #[test]
    fn ordering_is_left_major() {
        let space = build_state_space(inv(&["a", "b"]));
        let first = space.label_at(0).unwrap();
        assert_eq!(first.left, ContextId(0));
        assert_eq!(first.center, CenterState::phone(0, 0));
        assert_eq!(first.right, ContextId(0));
        let second = space.label_at(1).unwrap();
        assert_eq!(second.right, ContextId(1));
        let labels: Vec<_> = space.labels().collect();
        let mut sorted = labels.clone();
        sorted.sort_by_key(|l| (l.center.is_silence(), l.left, space.inventory().center_index(l.center), l.right));
        assert_eq!(labels, sorted);
    }

    proptest! {
        #[test]
        fn size_formula_and_round_trip(p in 1usize..=10) {
            let names: Vec<String> = (0..p).map(|i| format!("p{i}")).collect();
            let space = build_state_space(PhonemeInventory::new(names, "sil", "#").unwrap());
            let c = p + 1;
            prop_assert_eq!(space.len(), c * 3 * p * c + 1);
            let mut seen = std::collections::HashSet::new();
            for i in 0..space.len() {
                let label = space.label_at(i).unwrap();
                prop_assert!(space.inventory().is_valid_label(&label));
                prop_assert_eq!(space.index_of(&label), Some(i));
                prop_assert!(seen.insert(label));
            }
        }
    }
}
