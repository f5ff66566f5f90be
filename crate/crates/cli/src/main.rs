//! `fhmm`: flat-start alignment, prior estimation, target generation,
//! decoding and scoring over file artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fhmm::align::{
    estimate_gaussians, format_alignments, linear_segmentation, load_alignments, realign_corpus, save_alignments,
    validate_alignment, Alignment, FeatureSequence, MonophoneGaussians, RealignConfig, TransitionModel,
};
use fhmm::am::{
    estimate_priors, synthetic_scorer, table_scorer_from_file, write_posteriors, ContextPriors, ScoringMode,
    SyntheticConfig, TableScorer, DEFAULT_PRIOR_FLOOR,
};
use fhmm::augment::{chunk, DEFAULT_CHUNK_LEN, DEFAULT_OVERLAP};
use fhmm::config::Config;
use fhmm::decode::{
    brute_force_decode, decode, measure_throughput, DecodeParams, ScoringPath, SearchModels, ThroughputReport,
};
use fhmm::targets::{smooth_targets, LSPolicy};
use fhmm::wer::{corpus_wer, format_transcripts, load_transcripts};
use fhmm::{build_prefix_tree, load_arpa, Lexicon, PhonemeInventory, StateSpace};

const FEATURE_EXT: &str = "fhft";
const POSTERIOR_EXT: &str = "fhpd";
const TARGETS_EXT: &str = "fhtg";
const FRAME_SHIFT_MS: f64 = 10.0;

#[derive(Parser)]
#[command(name = "fhmm", version, about = "Factored hybrid HMM alignment and decoding")]
struct Cli {
    /// `key = value` configuration file. Relative `paths.*` entries resolve
    /// against its directory; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Uniform segmentation of every transcript over its feature frames.
    FlatstartAlign {
        #[command(flatten)]
        models: ModelArgs,
        /// `<utt> <word ...>` per line.
        #[arg(long)]
        transcripts: PathBuf,
        /// Directory of `<utt>.fhft` feature files.
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimates one diagonal Gaussian per center state from alignments.
    TrainMono {
        #[arg(long)]
        inventory: Option<PathBuf>,
        #[arg(long)]
        alignments: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        variance_floor: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Viterbi-EM: alternating Gaussian estimation and forced alignment.
    Realign {
        #[command(flatten)]
        models: ModelArgs,
        #[arg(long)]
        alignments: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        variance_floor: Option<f64>,
        /// Forbid optional silence between words.
        #[arg(long)]
        no_silence: bool,
        #[arg(long)]
        out: PathBuf,
        /// Also write the Gaussians of the last iteration.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Relative-frequency context priors from alignments.
    EstimatePriors {
        #[arg(long)]
        inventory: Option<PathBuf>,
        #[arg(long)]
        alignments: PathBuf,
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Soft training targets per utterance plus the chunk list.
    GenTargets {
        #[arg(long)]
        inventory: Option<PathBuf>,
        #[arg(long)]
        alignments: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        smooth_left: Option<bool>,
        #[arg(long)]
        smooth_center: Option<bool>,
        #[arg(long)]
        smooth_right: Option<bool>,
        #[arg(long, default_value_t = DEFAULT_CHUNK_LEN)]
        chunk_len: usize,
        #[arg(long, default_value_t = DEFAULT_OVERLAP)]
        overlap: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Synthetic factored posteriors peaked on the labels of alignments.
    SynthPosteriors {
        #[arg(long)]
        inventory: Option<PathBuf>,
        #[arg(long)]
        alignments: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        peak: f64,
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Beam search over every posterior dump in a directory.
    Decode(DecodeArgs),
    /// Exhaustive search over word sequences; tiny inputs only.
    OracleDecode {
        #[command(flatten)]
        args: DecodeArgs,
        #[arg(long, default_value_t = 3)]
        max_words: usize,
    },
    /// Corpus WER of a hypothesis transcript file against references.
    ScoreWer {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        hypothesis: PathBuf,
    },
    /// Decodes and reports throughput and scorer traffic.
    Bench {
        #[command(flatten)]
        args: DecodeArgs,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    inventory: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    models: ModelArgs,
    #[arg(long)]
    lm: Option<PathBuf>,
    #[arg(long)]
    priors: Option<PathBuf>,
    /// Directory of `<utt>.fhpd` posterior dumps.
    #[arg(long)]
    posteriors: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beam: Option<f64>,
    #[arg(long)]
    max_hyps: Option<usize>,
    #[arg(long)]
    word_end_beam: Option<f64>,
    #[arg(long)]
    mode: Option<ScoringMode>,
    /// `on` scores active pairs in one batch per frame, `off` per hypothesis.
    #[arg(long)]
    cache: Option<ScoringPath>,
    /// `<utt> <score> <word ...>` lines.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `<utt> <word ...>` lines, comparable with `score-wer`.
    #[arg(long)]
    transcripts: Option<PathBuf>,
    /// Per-frame labels of the best path, in alignment format.
    #[arg(long)]
    trace: Option<PathBuf>,
}

struct Settings {
    config: Config,
    base: PathBuf,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Ok(Self {
                config: Config::load(p).with_context(|| format!("reading config {}", p.display()))?,
                base: p.parent().map(Path::to_path_buf).unwrap_or_default(),
            }),
            None => Ok(Self {
                config: Config::default(),
                base: PathBuf::new(),
            }),
        }
    }

    /// The flag if given, else `paths.<name>` from the config.
    fn path(&self, flag: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
        if let Some(p) = flag {
            return Ok(p.clone());
        }
        match self.config.path(name) {
            Some(p) => Ok(self.base.join(p)),
            None => bail!("missing --{name} (or `paths.{name}` in the config)"),
        }
    }

    fn value<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => Ok(self.config.get(key)?),
        }
    }

    fn inventory(&self, flag: &Option<PathBuf>) -> Result<PhonemeInventory> {
        let p = self.path(flag, "inventory")?;
        PhonemeInventory::load(&p).with_context(|| format!("loading inventory {}", p.display()))
    }

    fn lexicon(&self, inv: &PhonemeInventory, flag: &Option<PathBuf>) -> Result<Lexicon> {
        let p = self.path(flag, "lexicon")?;
        Lexicon::load(inv, &p).with_context(|| format!("loading lexicon {}", p.display()))
    }

    fn transitions(&self) -> Result<TransitionModel> {
        let mut params = DecodeParams::default();
        self.config.apply(&mut params)?;
        params.transitions.validate()?;
        Ok(params.transitions)
    }
}

fn load_features(dir: &Path, utt: &str) -> Result<FeatureSequence> {
    let p = dir.join(format!("{utt}.{FEATURE_EXT}"));
    FeatureSequence::load(&p).with_context(|| format!("loading features {}", p.display()))
}

fn corpus_features(dir: &Path, alignments: &[Alignment]) -> Result<Vec<FeatureSequence>> {
    alignments.iter().map(|a| load_features(dir, &a.utt)).collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Posterior dumps of a directory, sorted by utterance id.
fn posterior_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == POSTERIOR_EXT) {
            let utt = path.file_stem().and_then(|s| s.to_str()).context("non-UTF-8 file name")?.to_string();
            out.push((utt, path));
        }
    }
    out.sort();
    if out.is_empty() {
        bail!("no .{POSTERIOR_EXT} files in {}", dir.display());
    }
    Ok(out)
}

struct DecodeSetup {
    inv: PhonemeInventory,
    lex: Lexicon,
    tree: fhmm::PrefixTree,
    priors: ContextPriors,
    lm: fhmm::NGramLM,
    params: DecodeParams,
    utts: Vec<(String, TableScorer)>,
}

impl DecodeSetup {
    fn load(s: &Settings, a: &DecodeArgs) -> Result<Self> {
        let inv = s.inventory(&a.models.inventory)?;
        let lex = s.lexicon(&inv, &a.models.lexicon)?;
        let tree = build_prefix_tree(&lex)?;
        let space = StateSpace::new(inv.clone());
        let priors_path = s.path(&a.priors, "priors")?;
        let priors = ContextPriors::load(&space, &priors_path)
            .with_context(|| format!("loading priors {}", priors_path.display()))?;
        let lm_path = s.path(&a.lm, "lm")?;
        let lm = load_arpa(&lm_path).with_context(|| format!("loading LM {}", lm_path.display()))?;

        let mut params = DecodeParams::default();
        s.config.apply(&mut params)?;
        if let Some(v) = a.alpha {
            params.alpha = v;
        }
        if let Some(v) = a.beam {
            params.beam.beam_logwidth = v;
        }
        if let Some(v) = a.max_hyps {
            params.beam.max_hyps = v;
        }
        if let Some(v) = a.word_end_beam {
            params.beam.word_end_beam = v;
        }
        if let Some(v) = a.mode {
            params.mode = v;
        }
        if let Some(v) = a.cache {
            params.scoring = v;
        }
        params.validate()?;

        let mut utts = Vec::new();
        for (utt, path) in posterior_files(&a.posteriors)? {
            let scorer = table_scorer_from_file(&path).with_context(|| format!("loading {}", path.display()))?;
            if scorer.num_contexts() != inv.num_contexts() || scorer.num_centers() != inv.num_centers() {
                bail!("{}: posterior dimensions do not match the inventory", path.display());
            }
            utts.push((utt, scorer));
        }
        Ok(Self {
            inv,
            lex,
            tree,
            priors,
            lm,
            params,
            utts,
        })
    }

    fn models(&self) -> SearchModels<'_> {
        SearchModels {
            inventory: &self.inv,
            lexicon: &self.lex,
            tree: &self.tree,
            priors: &self.priors,
            lm: &self.lm,
        }
    }
}

use fhmm::am::FactoredScorer;

fn write_decode_outputs(a: &DecodeArgs, lines: &[String], hyps: &[(String, Vec<String>)]) -> Result<()> {
    let mut text = lines.join("\n");
    text.push('\n');
    match &a.out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    if let Some(p) = &a.transcripts {
        write(p, &format_transcripts(hyps))?;
    }
    Ok(())
}

fn run_decode(s: &Settings, a: &DecodeArgs) -> Result<Vec<ThroughputReport>> {
    let setup = DecodeSetup::load(s, a)?;
    let mut lines = Vec::new();
    let mut hyps = Vec::new();
    let mut traces = Vec::new();
    let mut reports = Vec::new();
    for (utt, scorer) in &setup.utts {
        let r = decode(setup.models(), &setup.params, scorer).with_context(|| format!("decoding `{utt}`"))?;
        lines.push(r.to_line(utt));
        reports.push(measure_throughput(&r, FRAME_SHIFT_MS));
        traces.push(Alignment {
            utt: utt.clone(),
            words: r.words.clone(),
            labels: r.labels.clone(),
        });
        hyps.push((utt.clone(), r.words));
    }
    write_decode_outputs(a, &lines, &hyps)?;
    if let Some(p) = &a.trace {
        write(p, &format_alignments(&setup.inv, &traces))?;
    }
    Ok(reports)
}

fn total_report(reports: &[ThroughputReport]) -> ThroughputReport {
    let frames: usize = reports.iter().map(|r| r.frames).sum();
    let elapsed_secs: f64 = reports.iter().map(|r| r.elapsed_secs).sum();
    let scorer_calls: usize = reports.iter().map(|r| r.scorer_calls).sum();
    let naive_calls: usize = reports.iter().map(|r| r.naive_calls).sum();
    let audio = frames as f64 * FRAME_SHIFT_MS / 1000.0;
    ThroughputReport {
        frames,
        elapsed_secs,
        frames_per_sec: if elapsed_secs > 0.0 { frames as f64 / elapsed_secs } else { f64::INFINITY },
        real_time_factor: if audio > 0.0 { elapsed_secs / audio } else { 0.0 },
        scorer_calls,
        naive_calls,
        relative_savings: if naive_calls > 0 { 1.0 - scorer_calls as f64 / naive_calls as f64 } else { 0.0 },
    }
}

fn run(cli: Cli) -> Result<()> {
    let s = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::FlatstartAlign {
            models,
            transcripts,
            features,
            out,
        } => {
            let inv = s.inventory(&models.inventory)?;
            let lex = s.lexicon(&inv, &models.lexicon)?;
            let mut alignments = Vec::new();
            for (utt, words) in load_transcripts(&transcripts)? {
                let frames = load_features(&features, &utt)?.len();
                let a = linear_segmentation(&inv, &lex, &utt, &words, frames).with_context(|| format!("segmenting `{utt}`"))?;
                alignments.push(a);
            }
            save_alignments(&inv, &out, &alignments)?;
            eprintln!("flat-start aligned {} utterances", alignments.len());
        }
        Command::TrainMono {
            inventory,
            alignments,
            features,
            variance_floor,
            out,
        } => {
            let inv = s.inventory(&inventory)?;
            let alignments = load_alignments(&inv, &alignments)?;
            let feats = corpus_features(&features, &alignments)?;
            let floor = s.value(variance_floor, "align.variance_floor")?.unwrap_or(fhmm::align::DEFAULT_VARIANCE_FLOOR);
            let pairs: Vec<_> = feats.iter().zip(&alignments).collect();
            let model = estimate_gaussians(&inv, &pairs, floor)?;
            model.save(&inv, &out)?;
        }
        Command::Realign {
            models,
            alignments,
            features,
            iterations,
            variance_floor,
            no_silence,
            out,
            model_out,
        } => {
            let inv = s.inventory(&models.inventory)?;
            let lex = s.lexicon(&inv, &models.lexicon)?;
            let alignments = load_alignments(&inv, &alignments)?;
            let feats = corpus_features(&features, &alignments)?;
            let defaults = RealignConfig::default();
            let config = RealignConfig {
                iterations: s.value(iterations, "align.iterations")?.unwrap_or(defaults.iterations),
                variance_floor: s.value(variance_floor, "align.variance_floor")?.unwrap_or(defaults.variance_floor),
                allow_silence: !no_silence && s.config.get("align.allow_silence")?.unwrap_or(defaults.allow_silence),
            };
            let result = realign_corpus(&inv, &lex, &feats, &alignments, &s.transitions()?, &config)?;
            for (i, score) in result.scores.iter().enumerate() {
                eprintln!("iteration {}: total log score {score:.6}", i + 1);
            }
            for a in &result.alignments {
                validate_alignment(&inv, &lex, a, config.allow_silence)?;
            }
            save_alignments(&inv, &out, &result.alignments)?;
            if let (Some(path), Some(model)) = (model_out, result.model.as_ref()) {
                MonophoneGaussians::save(model, &inv, path)?;
            }
        }
        Command::EstimatePriors {
            inventory,
            alignments,
            floor,
            out,
        } => {
            let inv = s.inventory(&inventory)?;
            let alignments = load_alignments(&inv, &alignments)?;
            let floor = s.value(floor, "am.prior_floor")?.unwrap_or(DEFAULT_PRIOR_FLOOR);
            let space = StateSpace::new(inv);
            estimate_priors(&space, &alignments, floor)?.save(&space, &out)?;
        }
        Command::GenTargets {
            inventory,
            alignments,
            epsilon,
            smooth_left,
            smooth_center,
            smooth_right,
            chunk_len,
            overlap,
            out_dir,
        } => {
            let inv = s.inventory(&inventory)?;
            let alignments = load_alignments(&inv, &alignments)?;
            let d = LSPolicy::default();
            let policy = LSPolicy {
                epsilon: s.value(epsilon, "targets.epsilon")?.unwrap_or(d.epsilon),
                left: s.value(smooth_left, "targets.smooth_left")?.unwrap_or(d.left),
                center: s.value(smooth_center, "targets.smooth_center")?.unwrap_or(d.center),
                right: s.value(smooth_right, "targets.smooth_right")?.unwrap_or(d.right),
            };
            create_dir(&out_dir)?;
            let mut chunks = String::new();
            for a in &alignments {
                smooth_targets(&inv, a, &policy)?.save(out_dir.join(format!("{}.{TARGETS_EXT}", a.utt)))?;
                for (start, end) in chunk(a.len(), chunk_len, overlap)? {
                    chunks.push_str(&format!("{}\t{start}\t{end}\n", a.utt));
                }
            }
            write(&out_dir.join("chunks.txt"), &chunks)?;
        }
        Command::SynthPosteriors {
            inventory,
            alignments,
            peak,
            jitter,
            seed,
            out_dir,
        } => {
            let inv = s.inventory(&inventory)?;
            let alignments = load_alignments(&inv, &alignments)?;
            let space = StateSpace::new(inv);
            create_dir(&out_dir)?;
            for (i, a) in alignments.iter().enumerate() {
                let config = SyntheticConfig {
                    peak,
                    jitter,
                    seed: seed.wrapping_add(i as u64),
                };
                let scorer = synthetic_scorer(&space, &a.labels, config)?;
                write_posteriors(out_dir.join(format!("{}.{POSTERIOR_EXT}", a.utt)), &scorer)?;
            }
        }
        Command::Decode(a) => {
            run_decode(&s, &a)?;
        }
        Command::OracleDecode { args, max_words } => {
            let setup = DecodeSetup::load(&s, &args)?;
            let mut lines = Vec::new();
            let mut hyps = Vec::new();
            for (utt, scorer) in &setup.utts {
                let r = brute_force_decode(setup.models(), &setup.params, scorer, max_words)
                    .with_context(|| format!("oracle decoding `{utt}`"))?;
                lines.push(format!("{utt} {:.6}{}", r.score, r.words.iter().map(|w| format!(" {w}")).collect::<String>()));
                hyps.push((utt.clone(), r.words));
            }
            write_decode_outputs(&args, &lines, &hyps)?;
        }
        Command::ScoreWer { reference, hypothesis } => {
            let refs = load_transcripts(&reference)?;
            let hyps = load_transcripts(&hypothesis)?;
            let c = corpus_wer(&refs, &hyps);
            println!(
                "WER {} (S={} D={} I={} N={})",
                c.wer(),
                c.substitutions,
                c.deletions,
                c.insertions,
                c.reference_len
            );
        }
        Command::Bench { args } => {
            let reports = run_decode(&s, &args)?;
            let mode = if args.cache == Some(ScoringPath::Naive) { "off" } else { "on" };
            println!("cache\t{mode}");
            println!("{}", total_report(&reports));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
