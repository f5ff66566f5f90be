use crate::error::{Error, Result};

/// Log transition penalties, distinct for speech and silence states, and
/// their common scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionModel {
    pub speech_loop: f64,
    pub speech_forward: f64,
    pub silence_loop: f64,
    pub silence_forward: f64,
    pub beta: f64,
}

impl Default for TransitionModel {
    fn default() -> Self {
        Self {
            speech_loop: -0.6931,
            speech_forward: -0.6931,
            silence_loop: -0.1054,
            silence_forward: -2.3026,
            beta: 1.0,
        }
    }
}

impl TransitionModel {
    /// All penalties zero.
    pub fn free() -> Self {
        Self {
            speech_loop: 0.0,
            speech_forward: 0.0,
            silence_loop: 0.0,
            silence_forward: 0.0,
            beta: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.speech_loop, self.speech_forward, self.silence_loop, self.silence_forward, self.beta];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("transition penalties and beta must be finite".into()));
        }
        Ok(())
    }

    /// Unscaled penalty for leaving a state by its loop or forward arc.
    pub fn penalty(&self, from_silence: bool, advance: bool) -> f64 {
        match (from_silence, advance) {
            (false, false) => self.speech_loop,
            (false, true) => self.speech_forward,
            (true, false) => self.silence_loop,
            (true, true) => self.silence_forward,
        }
    }

    pub fn scaled(&self, from_silence: bool, advance: bool) -> f64 {
        self.beta * self.penalty(from_silence, advance)
    }
}
