//! Left-to-right HMM state graphs and their Viterbi search.

use crate::error::{Error, Result};
use crate::inventory::{PhonemeInventory, TriphoneLabel};
use crate::lexicon::{expand_states, Lexicon};

use super::TransitionModel;

#[derive(Clone, Debug, PartialEq)]
pub struct GraphState {
    pub label: TriphoneLabel,
    /// Forward successors; every state also has a self-loop.
    pub next: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateGraph {
    pub states: Vec<GraphState>,
    pub initial: Vec<usize>,
    pub finals: Vec<usize>,
}

impl StateGraph {
    fn push(&mut self, label: TriphoneLabel) -> usize {
        self.states.push(GraphState { label, next: Vec::new() });
        self.states.len() - 1
    }

    fn link(&mut self, from: &[usize], to: &[usize]) {
        for &f in from {
            self.states[f].next.extend_from_slice(to);
        }
    }

    /// Fewest frames of any complete path.
    pub fn min_path_len(&self) -> Option<usize> {
        let n = self.states.len();
        let mut dist = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        for &s in &self.initial {
            dist[s] = 1;
            queue.push_back(s);
        }
        while let Some(s) = queue.pop_front() {
            for &j in &self.states[s].next {
                if dist[j] == usize::MAX {
                    dist[j] = dist[s] + 1;
                    queue.push_back(j);
                }
            }
        }
        self.finals.iter().map(|&f| dist[f]).filter(|&d| d != usize::MAX).min()
    }
}

/// Expanded HMM of a transcript: every pronunciation of every word as a
/// parallel branch, with optional silence before, between and after words.
pub fn transcript_graph(
    inventory: &PhonemeInventory,
    lexicon: &Lexicon,
    words: &[String],
    allow_silence: bool,
) -> Result<StateGraph> {
    let mut g = StateGraph::default();
    let silence = inventory.silence_label();
    let mut exits: Vec<usize> = Vec::new();
    for i in 0..=words.len() {
        let sil: Vec<usize> = if allow_silence { vec![g.push(silence)] } else { Vec::new() };
        g.link(&exits, &sil);
        if i == 0 {
            g.initial.extend_from_slice(&sil);
        }
        let Some(word) = words.get(i) else {
            g.finals = exits.iter().chain(&sil).copied().collect();
            break;
        };
        let id = lexicon.word_id(word).ok_or_else(|| Error::OutOfVocabulary(word.clone()))?;
        let mut entries = Vec::new();
        let mut word_exits = Vec::new();
        for pron in lexicon.pronunciations_of(id) {
            let labels = expand_states(inventory, &pron.phones)?;
            let first = g.states.len();
            for (k, label) in labels.into_iter().enumerate() {
                let s = g.push(label);
                if k > 0 {
                    g.states[s - 1].next.push(s);
                }
            }
            entries.push(first);
            word_exits.push(g.states.len() - 1);
        }
        g.link(&exits, &entries);
        g.link(&sil, &entries);
        if i == 0 {
            g.initial.extend_from_slice(&entries);
        }
        exits = word_exits;
    }
    if g.finals.is_empty() {
        return Err(Error::NoPath("empty transcript and silence disallowed".into()));
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViterbiPath {
    pub states: Vec<usize>,
    pub score: f64,
}

/// Best path through `graph` given per-frame, per-state emission scores.
/// Each frame after the first adds `beta * penalty` of the arc taken; on
/// equal scores the self-loop wins, then the lowest predecessor index.
pub fn viterbi(graph: &StateGraph, emissions: &[Vec<f64>], transitions: &TransitionModel) -> Result<ViterbiPath> {
    let n = graph.states.len();
    let t_len = emissions.len();
    if t_len == 0 {
        return Err(Error::NoPath("no frames".into()));
    }
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, s) in graph.states.iter().enumerate() {
        for &j in &s.next {
            preds[j].push(i);
        }
    }
    for p in &mut preds {
        p.sort_unstable();
        p.dedup();
    }
    let silent: Vec<bool> = graph.states.iter().map(|s| s.label.center.is_silence()).collect();

    let mut delta = vec![f64::NEG_INFINITY; n];
    for &s in &graph.initial {
        delta[s] = emissions[0][s];
    }
    let mut back: Vec<Vec<u32>> = Vec::with_capacity(t_len);
    back.push(vec![u32::MAX; n]);
    for e in &emissions[1..] {
        let mut next = vec![f64::NEG_INFINITY; n];
        let mut bp = vec![u32::MAX; n];
        for j in 0..n {
            let mut best = delta[j] + transitions.scaled(silent[j], false);
            let mut arg = j;
            for &i in &preds[j] {
                let cand = delta[i] + transitions.scaled(silent[i], true);
                if cand > best {
                    best = cand;
                    arg = i;
                }
            }
            if best > f64::NEG_INFINITY {
                next[j] = best + e[j];
                bp[j] = arg as u32;
            }
        }
        delta = next;
        back.push(bp);
    }
    let mut end = None;
    for &f in &graph.finals {
        if delta[f] > f64::NEG_INFINITY && end.is_none_or(|e: usize| delta[f] > delta[e]) {
            end = Some(f);
        }
    }
    let end = end.ok_or_else(|| Error::NoPath(format!("no finite-score path over {t_len} frames")))?;
    let mut states = vec![end; t_len];
    for t in (1..t_len).rev() {
        states[t - 1] = back[t][states[t]] as usize;
    }
    Ok(ViterbiPath {
        states,
        score: delta[end],
    })
}
