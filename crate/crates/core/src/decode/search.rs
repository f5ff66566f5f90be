use std::cmp::Ordering;
use std::collections::HashMap;
use std::time::Instant;

use crate::am::{active_pair_count, batch_score_frame, naive_score_frame, FactoredScorer, ScoreCache, ScorerStats};
use crate::error::{Error, Result};
use crate::inventory::{CenterState, ContextId, StateSpace, TriphoneLabel};
use crate::lexicon::WordId;
use crate::lm::LmWord;
use crate::tree::{NodeId, ROOT};

use super::{DecodeParams, DecodeResult, ScoringPath, SearchModels};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Position {
    Phone { node: NodeId, substate: u8, right: ContextId },
    Silence,
}

#[derive(Default)]
struct Histories {
    table: Vec<Vec<LmWord>>,
    ids: HashMap<Vec<LmWord>, u32>,
}

impl Histories {
    fn intern(&mut self, h: Vec<LmWord>) -> u32 {
        if let Some(&id) = self.ids.get(&h) {
            return id;
        }
        let id = self.table.len() as u32;
        self.table.push(h.clone());
        self.ids.insert(h, id);
        id
    }
}

#[derive(Clone, Copy, Debug)]
struct Hyp {
    pos: Position,
    hist: u32,
    score: f64,
    /// Index into the previous frame's trace.
    prev: u32,
    word: Option<WordId>,
}

#[derive(Clone, Copy, Debug)]
struct Trace {
    prev: u32,
    label: TriphoneLabel,
    word: Option<WordId>,
}

struct Search<'a> {
    models: SearchModels<'a>,
    params: &'a DecodeParams,
    space: StateSpace,
    lm_words: Vec<LmWord>,
    /// Right contexts a hypothesis entering each node can carry.
    fanout: Vec<Vec<ContextId>>,
    histories: Histories,
}

impl<'a> Search<'a> {
    fn new(models: SearchModels<'a>, params: &'a DecodeParams) -> Result<Self> {
        let inv = models.inventory;
        let boundary = inv.boundary();
        let fanout = models
            .tree
            .nodes()
            .iter()
            .map(|n| {
                let mut r: Vec<ContextId> = n.children.iter().map(|&(p, _)| inv.context_of(p)).collect();
                if !n.words.is_empty() {
                    r.push(boundary);
                }
                r
            })
            .collect();
        Ok(Self {
            models,
            params,
            space: StateSpace::new(inv.clone()),
            lm_words: models.lm_words()?,
            fanout,
            histories: Histories::default(),
        })
    }

    fn label(&self, pos: Position) -> TriphoneLabel {
        let inv = self.models.inventory;
        match pos {
            Position::Silence => inv.silence_label(),
            Position::Phone { node, substate, right } => {
                let n = self.models.tree.node(node);
                let phoneme = n.phone.expect("search positions never sit on the root");
                let left = match n.parent {
                    Some(p) if p != ROOT => inv.context_of(self.models.tree.node(p).phone.expect("non-root parent")),
                    _ => inv.boundary(),
                };
                TriphoneLabel {
                    left,
                    center: CenterState::Phone { phoneme, substate },
                    right,
                }
            }
        }
    }

    fn entries(&self, node: NodeId) -> impl Iterator<Item = Position> + '_ {
        self.fanout[node.0].iter().map(move |&right| Position::Phone {
            node,
            substate: 0,
            right,
        })
    }

    fn root_entries(&self) -> Vec<Position> {
        self.models
            .tree
            .node(ROOT)
            .children
            .iter()
            .flat_map(|&(_, child)| self.entries(child))
            .collect()
    }

    fn lm_term(&self, hist: u32, word: WordId) -> f64 {
        let lp = self.models.lm.score_ids(&self.histories.table[hist as usize], self.lm_words[word.0]);
        self.params.alpha * lp
    }

    fn extend(&mut self, hist: u32, word: WordId) -> u32 {
        let mut h = self.histories.table[hist as usize].clone();
        h.push(self.lm_words[word.0]);
        self.models.lm.truncate_history(&mut h);
        self.histories.intern(h)
    }

    /// Candidates of the next frame, recombined on (position, history),
    /// without acoustic scores.
    fn expand(&mut self, hyps: &[Hyp], root_entries: &[Position]) -> Vec<Hyp> {
        let tr = self.params.transitions;
        let inv = self.models.inventory;
        let boundary = inv.boundary();
        let mut index: HashMap<(Position, u32), usize> = HashMap::new();
        let mut next: Vec<Hyp> = Vec::new();
        let mut push = |cand: Hyp| match index.get(&(cand.pos, cand.hist)) {
            Some(&i) => {
                if cand.score > next[i].score {
                    next[i] = cand;
                }
            }
            None => {
                index.insert((cand.pos, cand.hist), next.len());
                next.push(cand);
            }
        };
        for (i, h) in hyps.iter().enumerate() {
            let prev = i as u32;
            let silent = h.pos == Position::Silence;
            push(Hyp {
                score: h.score + tr.scaled(silent, false),
                prev,
                word: None,
                ..*h
            });
            let forward = tr.scaled(silent, true);
            match h.pos {
                Position::Silence => {
                    for &pos in root_entries {
                        push(Hyp {
                            pos,
                            hist: h.hist,
                            score: h.score + forward,
                            prev,
                            word: None,
                        });
                    }
                }
                Position::Phone { node, substate, right } if substate < 2 => push(Hyp {
                    pos: Position::Phone {
                        node,
                        substate: substate + 1,
                        right,
                    },
                    hist: h.hist,
                    score: h.score + forward,
                    prev,
                    word: None,
                }),
                Position::Phone { node, right, .. } if right != boundary => {
                    let phone = crate::inventory::PhonemeId(right.0);
                    let child = self.models.tree.child(node, phone).expect("right context is a child arc");
                    for pos in self.entries(child).collect::<Vec<_>>() {
                        push(Hyp {
                            pos,
                            hist: h.hist,
                            score: h.score + forward,
                            prev,
                            word: None,
                        });
                    }
                }
                Position::Phone { node, .. } => {
                    for &w in &self.models.tree.node(node).words.clone() {
                        let base = h.score + self.lm_term(h.hist, w);
                        let hist = self.extend(h.hist, w);
                        for &pos in std::iter::once(&Position::Silence).chain(root_entries) {
                            push(Hyp {
                                pos,
                                hist,
                                score: base + forward,
                                prev,
                                word: Some(w),
                            });
                        }
                    }
                }
            }
        }
        next
    }

    fn order(&self, a: &Hyp, la: usize, b: &Hyp, lb: usize) -> Ordering {
        la.cmp(&lb)
            .then_with(|| a.pos.cmp(&b.pos))
            .then_with(|| self.histories.table[a.hist as usize].cmp(&self.histories.table[b.hist as usize]))
    }

    /// Beam, word-end beam and histogram pruning; survivors come back in
    /// canonical (label, position, history) order.
    fn prune(&self, cands: Vec<Hyp>, labels: &[TriphoneLabel]) -> Vec<(Hyp, TriphoneLabel)> {
        let beam = &self.params.beam;
        let best = cands
            .iter()
            .map(|h| h.score)
            .filter(|s| s.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if best == f64::NEG_INFINITY {
            return Vec::new();
        }
        let mut kept: Vec<(Hyp, TriphoneLabel, usize)> = cands
            .into_iter()
            .zip(labels)
            .filter(|(h, _)| {
                h.score.is_finite()
                    && h.score >= best - beam.beam_logwidth
                    && (h.word.is_none() || h.score >= best - beam.word_end_beam)
            })
            .map(|(h, &l)| {
                let idx = self.space.index_of(&l).expect("search labels are valid");
                (h, l, idx)
            })
            .collect();
        if kept.len() > beam.max_hyps {
            kept.sort_by(|a, b| b.0.score.total_cmp(&a.0.score).then_with(|| self.order(&a.0, a.2, &b.0, b.2)));
            kept.truncate(beam.max_hyps);
        }
        kept.sort_by(|a, b| self.order(&a.0, a.2, &b.0, b.2));
        kept.into_iter().map(|(h, l, _)| (h, l)).collect()
    }
}

/// Beam search for the best word sequence under the log-linear combination
/// of acoustic, transition and LM scores.
pub fn decode(models: SearchModels<'_>, params: &DecodeParams, scorer: &dyn FactoredScorer) -> Result<DecodeResult> {
    let start = Instant::now();
    params.validate()?;
    let inv = models.inventory;
    if scorer.num_contexts() != inv.num_contexts() || scorer.num_centers() != inv.num_centers() {
        return Err(Error::Dimension(format!(
            "scorer has {} contexts / {} centers, inventory {} / {}",
            scorer.num_contexts(),
            scorer.num_centers(),
            inv.num_contexts(),
            inv.num_centers()
        )));
    }
    let frames = scorer.num_frames();
    if frames == 0 {
        return Err(Error::Dimension("cannot decode zero frames".into()));
    }
    let mut search = Search::new(models, params)?;
    let root_entries = search.root_entries();
    let h0 = search.histories.intern(models.lm.initial_history());

    let mut cache = ScoreCache::new();
    let mut naive_stats = ScorerStats::default();
    let mut traces: Vec<Vec<Trace>> = Vec::with_capacity(frames);
    let mut active_pairs = Vec::with_capacity(frames);
    let mut active_hyps = Vec::with_capacity(frames);
    let mut hyps: Vec<Hyp> = Vec::new();

    for t in 0..frames {
        let mut cands = if t == 0 {
            std::iter::once(Position::Silence)
                .chain(root_entries.iter().copied())
                .map(|pos| Hyp {
                    pos,
                    hist: h0,
                    score: 0.0,
                    prev: u32::MAX,
                    word: None,
                })
                .collect()
        } else {
            search.expand(&hyps, &root_entries)
        };
        let labels: Vec<TriphoneLabel> = cands.iter().map(|h| search.label(h.pos)).collect();
        let ac = match params.scoring {
            ScoringPath::Batched => batch_score_frame(
                scorer,
                &mut cache,
                t,
                &labels,
                models.priors,
                &params.scales,
                inv,
                params.mode,
            )?,
            ScoringPath::Naive => naive_score_frame(
                scorer,
                &mut naive_stats,
                t,
                &labels,
                models.priors,
                &params.scales,
                inv,
                params.mode,
            )?,
        };
        for (h, a) in cands.iter_mut().zip(&ac) {
            h.score += a;
        }
        active_pairs.push(active_pair_count(inv, &labels));
        active_hyps.push(labels.len());
        let survivors = search.prune(cands, &labels);
        if survivors.is_empty() {
            return Err(Error::EmptyBeam { frame: t });
        }
        traces.push(
            survivors
                .iter()
                .map(|(h, label)| Trace {
                    prev: h.prev,
                    label: *label,
                    word: h.word,
                })
                .collect(),
        );
        hyps = survivors.into_iter().map(|(h, _)| h).enumerate().map(|(i, h)| Hyp { prev: i as u32, ..h }).collect();
    }

    // Complete paths end in silence or at a word end.
    let boundary = inv.boundary();
    let mut best: Option<(f64, usize, Option<WordId>)> = None;
    for (i, h) in hyps.iter().enumerate() {
        let mut consider = |score: f64, word: Option<WordId>| {
            if score > f64::NEG_INFINITY && best.is_none_or(|(s, _, _)| score > s) {
                best = Some((score, i, word));
            }
        };
        match h.pos {
            Position::Silence => consider(h.score, None),
            Position::Phone { node, substate: 2, right } if right == boundary => {
                for &w in &models.tree.node(node).words {
                    consider(h.score + search.lm_term(h.hist, w), Some(w));
                }
            }
            Position::Phone { .. } => {}
        }
    }
    let (score, end, last_word) = best.ok_or(Error::EmptyBeam { frame: frames - 1 })?;

    let mut labels = vec![traces[0][0].label; frames];
    let mut word_ids = Vec::new();
    word_ids.extend(last_word);
    let mut idx = end;
    for t in (0..frames).rev() {
        let tr = traces[t][idx];
        labels[t] = tr.label;
        word_ids.extend(tr.word);
        idx = tr.prev as usize;
    }
    word_ids.reverse();
    let stats = match params.scoring {
        ScoringPath::Batched => cache.stats(),
        ScoringPath::Naive => naive_stats,
    };
    Ok(DecodeResult {
        words: word_ids.iter().map(|&w| models.lexicon.word(w).to_string()).collect(),
        word_ids,
        score,
        labels,
        active_pairs,
        active_hyps,
        stats,
        elapsed: start.elapsed(),
    })
}
