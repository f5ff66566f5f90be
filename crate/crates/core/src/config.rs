//! `key = value` configuration files with namespaced keys.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::decode::DecodeParams;
use crate::error::{Error, Result};

const KNOWN: &[&str] = &[
    "am.gamma_left",
    "am.gamma_center",
    "am.gamma_right",
    "am.prior_floor",
    "transition.speech_loop",
    "transition.speech_forward",
    "transition.silence_loop",
    "transition.silence_forward",
    "transition.beta",
    "lm.alpha",
    "decode.beam_logwidth",
    "decode.max_hyps",
    "decode.word_end_beam",
    "decode.mode",
    "decode.cache",
    "align.iterations",
    "align.variance_floor",
    "align.allow_silence",
    "targets.epsilon",
    "targets.smooth_left",
    "targets.smooth_center",
    "targets.smooth_right",
];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    /// Blank lines and `#` comments are ignored; keys outside the known set
    /// and the free-form `paths.` namespace are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::Parse {
                what: "config",
                line: i + 1,
                reason,
            };
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            let (k, v) = (k.trim(), v.trim());
            if !(KNOWN.contains(&k) || k.strip_prefix("paths.").is_some_and(|p| !p.is_empty())) {
                return Err(err(format!("unknown key `{k}`")));
            }
            values.insert(k.to_string(), v.to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| v.parse().map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`"))))
            .transpose()
    }

    pub fn path(&self, name: &str) -> Option<PathBuf> {
        self.raw(&format!("paths.{name}")).map(PathBuf::from)
    }

    /// Overrides the fields of `params` named in the file.
    pub fn apply(&self, params: &mut DecodeParams) -> Result<()> {
        fn set<T: FromStr>(cfg: &Config, key: &str, slot: &mut T) -> Result<()> {
            if let Some(v) = cfg.get(key)? {
                *slot = v;
            }
            Ok(())
        }
        set(self, "am.gamma_left", &mut params.scales.gamma_left)?;
        set(self, "am.gamma_center", &mut params.scales.gamma_center)?;
        set(self, "am.gamma_right", &mut params.scales.gamma_right)?;
        set(self, "transition.speech_loop", &mut params.transitions.speech_loop)?;
        set(self, "transition.speech_forward", &mut params.transitions.speech_forward)?;
        set(self, "transition.silence_loop", &mut params.transitions.silence_loop)?;
        set(self, "transition.silence_forward", &mut params.transitions.silence_forward)?;
        set(self, "transition.beta", &mut params.transitions.beta)?;
        set(self, "lm.alpha", &mut params.alpha)?;
        set(self, "decode.beam_logwidth", &mut params.beam.beam_logwidth)?;
        set(self, "decode.max_hyps", &mut params.beam.max_hyps)?;
        set(self, "decode.word_end_beam", &mut params.beam.word_end_beam)?;
        if let Some(mode) = self.raw("decode.mode") {
            params.mode = mode.parse()?;
        }
        if let Some(cache) = self.raw("decode.cache") {
            params.scoring = cache.parse()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::am::ScoringMode;

    #[test]
    fn parse_and_apply() {
        let cfg = Config::parse(
            "# comment\nam.gamma_center = 0.5\nlm.alpha=3 # inline\ndecode.mode = di\npaths.lexicon = lex.txt\ndecode.beam_logwidth = inf\n",
        )
        .unwrap();
        let mut p = DecodeParams::default();
        cfg.apply(&mut p).unwrap();
        assert_eq!(p.scales.gamma_center, 0.5);
        assert_eq!(p.alpha, 3.0);
        assert_eq!(p.mode, ScoringMode::Di);
        assert_eq!(p.beam.beam_logwidth, f64::INFINITY);
        assert_eq!(cfg.path("lexicon"), Some(PathBuf::from("lex.txt")));
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(Config::parse("am.gamma = 1\n").is_err());
        assert!(Config::parse("lm.alpha\n").is_err());
        let cfg = Config::parse("lm.alpha = x\n").unwrap();
        assert!(cfg.apply(&mut DecodeParams::default()).is_err());
    }
}
