//! Random small worlds shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write;

use fhmm::align::{Alignment, FeatureSequence};
use fhmm::am::ContextPriors;
use fhmm::decode::SearchModels;
use fhmm::lexicon::expand_states;
use fhmm::{build_prefix_tree, Lexicon, NGramLM, PhonemeInventory, PrefixTree, StateSpace, TriphoneLabel, WordId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const PHONES: [&str; 5] = ["a", "b", "c", "d", "e"];

pub struct World {
    pub inv: PhonemeInventory,
    pub space: StateSpace,
    pub lex: Lexicon,
    pub tree: PrefixTree,
    pub priors: ContextPriors,
    pub lm: NGramLM,
}

impl World {
    pub fn models(&self) -> SearchModels<'_> {
        SearchModels {
            inventory: &self.inv,
            lexicon: &self.lex,
            tree: &self.tree,
            priors: &self.priors,
            lm: &self.lm,
        }
    }

    pub fn words(&self, ids: &[WordId]) -> Vec<String> {
        ids.iter().map(|&w| self.lex.word(w).to_string()).collect()
    }
}

pub fn inventory(phonemes: usize) -> PhonemeInventory {
    let mut text = String::from("sil\n");
    for p in &PHONES[..phonemes] {
        text.push_str(p);
        text.push('\n');
    }
    PhonemeInventory::parse(&text).unwrap()
}

/// Strictly positive random joint over the dense label index.
pub fn random_joint(space: &StateSpace, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..space.len()).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Words `w0..` with distinct random pronunciations.
pub fn random_lexicon(inv: &PhonemeInventory, rng: &mut ChaCha8Rng, vocab: usize, max_pron: usize) -> Lexicon {
    let p = inv.num_phonemes();
    let mut prons: Vec<Vec<&str>> = Vec::new();
    while prons.len() < vocab {
        let len = rng.random_range(1..=max_pron);
        let pron: Vec<&str> = (0..len).map(|_| PHONES[rng.random_range(0..p)]).collect();
        if !prons.contains(&pron) {
            prons.push(pron);
        }
    }
    let names: Vec<String> = (0..vocab).map(|i| format!("w{i}")).collect();
    Lexicon::from_entries(inv, names.iter().map(String::as_str).zip(prons.iter().map(Vec::as_slice))).unwrap()
}

pub fn world(inv: PhonemeInventory, lex: Lexicon, priors: ContextPriors, lm: NGramLM) -> World {
    let space = StateSpace::new(inv.clone());
    let tree = build_prefix_tree(&lex).unwrap();
    World {
        inv,
        space,
        lex,
        tree,
        priors,
        lm,
    }
}

/// Random lexicon, random exact priors, and either a uniform unigram LM or
/// a discounted bigram estimated from random counts.
pub fn random_world(rng: &mut ChaCha8Rng, phonemes: usize, vocab: usize, max_pron: usize, bigram: bool) -> World {
    let inv = inventory(phonemes);
    let space = StateSpace::new(inv.clone());
    let lex = random_lexicon(&inv, rng, vocab, max_pron);
    let priors = ContextPriors::from_joint(&space, &random_joint(&space, rng)).unwrap();
    let lm = if bigram {
        let corpus: Vec<Vec<String>> = (0..6)
            .map(|_| {
                let n = rng.random_range(1..=3);
                (0..n).map(|_| lex.words()[rng.random_range(0..vocab)].clone()).collect()
            })
            .collect();
        NGramLM::parse(&discounted_bigram_arpa(lex.words(), &corpus, 0.5)).unwrap()
    } else {
        NGramLM::uniform(lex.words()).unwrap()
    };
    world(inv, lex, priors, lm)
}

/// Frame labels of a word sequence: each state held 1..=`max_dur` frames,
/// silence optionally at the edges and between words.
pub fn render(world: &World, rng: &mut ChaCha8Rng, words: &[WordId], max_dur: usize, silence: bool) -> Vec<TriphoneLabel> {
    let sil = world.inv.silence_label();
    let mut labels = Vec::new();
    let hold = |labels: &mut Vec<TriphoneLabel>, l: TriphoneLabel, rng: &mut ChaCha8Rng| {
        let n = rng.random_range(1..=max_dur);
        labels.extend(std::iter::repeat_n(l, n));
    };
    for (i, &w) in words.iter().enumerate() {
        if silence && (i == 0 || rng.random_bool(0.5)) && rng.random_bool(0.5) {
            hold(&mut labels, sil, rng);
        }
        let pron = world.lex.pronunciations_of(w).next().unwrap();
        for l in expand_states(&world.inv, &pron.phones).unwrap() {
            hold(&mut labels, l, rng);
        }
    }
    if words.is_empty() || (silence && rng.random_bool(0.5)) {
        hold(&mut labels, sil, rng);
    }
    labels
}

/// A random word sequence of 0..=`max_words` words rendered within `max_frames`.
pub fn random_truth(
    world: &World,
    rng: &mut ChaCha8Rng,
    max_words: usize,
    max_frames: usize,
    max_dur: usize,
) -> (Vec<WordId>, Vec<TriphoneLabel>) {
    loop {
        let n = rng.random_range(0..=max_words);
        let words: Vec<WordId> = (0..n).map(|_| WordId(rng.random_range(0..world.lex.num_words()))).collect();
        let labels = render(world, rng, &words, max_dur, true);
        if labels.len() <= max_frames {
            return (words, labels);
        }
    }
}

/// ARPA text of an absolute-discounting bigram that backs off to the
/// add-one unigram. Every history's distribution is proper.
pub fn discounted_bigram_arpa(vocab: &[String], corpus: &[Vec<String>], discount: f64) -> String {
    let mut targets: Vec<String> = vocab.to_vec();
    targets.push("</s>".into());
    let mut uni: BTreeMap<&str, f64> = targets.iter().map(|w| (w.as_str(), 1.0)).collect();
    let mut bi: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for sent in corpus {
        let mut prev = "<s>";
        for w in sent.iter().map(String::as_str).chain(["</s>"]) {
            *uni.get_mut(w).unwrap() += 1.0;
            *bi.entry((prev, w)).or_default() += 1.0;
            prev = w;
        }
    }
    let total: f64 = uni.values().sum();
    let p_uni = |w: &str| uni[w] / total;

    let mut histories: Vec<&str> = vec!["<s>"];
    histories.extend(vocab.iter().map(String::as_str));
    let mut bigrams = Vec::new();
    let mut backoff: BTreeMap<&str, f64> = BTreeMap::new();
    for &h in &histories {
        let seen: Vec<(&str, f64)> = bi.iter().filter(|((a, _), _)| *a == h).map(|((_, b), &c)| (*b, c)).collect();
        if seen.is_empty() {
            continue;
        }
        let n_h: f64 = seen.iter().map(|(_, c)| c).sum();
        let unseen_mass: f64 = 1.0 - seen.iter().map(|(w, _)| p_uni(w)).sum::<f64>();
        let d = if unseen_mass > 1e-12 { discount } else { 0.0 };
        for &(w, c) in &seen {
            bigrams.push((h, w, (c - d) / n_h));
        }
        if d > 0.0 {
            backoff.insert(h, (d * seen.len() as f64 / n_h) / unseen_mass);
        }
    }

    let mut text = String::new();
    let _ = writeln!(text, "\\data\\\nngram 1={}\nngram 2={}\n\n\\1-grams:", targets.len() + 1, bigrams.len());
    let bo = |h: &str| backoff.get(h).map_or(String::new(), |b| format!("\t{}", b.log10()));
    let _ = writeln!(text, "-99\t<s>{}", bo("<s>"));
    for w in &targets {
        let _ = writeln!(text, "{}\t{}{}", p_uni(w).log10(), w, bo(w));
    }
    let _ = writeln!(text, "\n\\2-grams:");
    for (h, w, p) in bigrams {
        let _ = writeln!(text, "{}\t{h} {w}", p.log10());
    }
    text.push_str("\n\\end\\\n");
    text
}

pub struct GaussianCorpus {
    pub world: World,
    pub features: Vec<FeatureSequence>,
    pub truth: Vec<Alignment>,
}

/// Two-phoneme corpus whose frames are drawn from unit-variance Gaussians,
/// one per center state, with means `separation` apart along distinct axes.
pub fn gaussian_corpus(seed: u64, utterances: usize, separation: f64) -> GaussianCorpus {
    let inv = inventory(2);
    let lex = Lexicon::parse(&inv, "a\ta\nb\tb\nab\ta b\nbab\tb a b\n").unwrap();
    let space = StateSpace::new(inv.clone());
    let priors = ContextPriors::uniform(&space);
    let lm = NGramLM::uniform(lex.words()).unwrap();
    let world = world(inv, lex, priors, lm);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = world.inv.num_centers();
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut features = Vec::new();
    let mut truth = Vec::new();
    for u in 0..utterances {
        let n = rng.random_range(2..=4);
        let words: Vec<WordId> = (0..n).map(|_| WordId(rng.random_range(0..world.lex.num_words()))).collect();
        let labels = render(&world, &mut rng, &words, 4, true);
        let mut data = Vec::with_capacity(labels.len() * dim);
        for l in &labels {
            let axis = world.inv.center_index(l.center);
            data.extend((0..dim).map(|d| if d == axis { separation } else { 0.0 } + noise.sample(&mut rng)));
        }
        features.push(FeatureSequence::new(dim, data).unwrap());
        truth.push(Alignment {
            utt: format!("utt{u:02}"),
            words: world.words(&words),
            labels,
        });
    }
    GaussianCorpus { world, features, truth }
}
